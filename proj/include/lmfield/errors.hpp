#pragma once

#include <stdexcept>
#include <string>

namespace lmf {

enum class ErrorKind {
  parameter,
  sampling,
  alignment,
  geometry,
  lag,
  sample_size,
  degeneracy,
  domain,
  degenerate_input,
  configuration,
  io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::sampling: return "sampling";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::lag: return "lag";
    case ErrorKind::sample_size: return "sample_size";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::domain: return "domain";
    case ErrorKind::degenerate_input: return "degenerate_input";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by gram_schmidt when the k-th residual has (numerically) zero norm.
class DegeneracyError : public Error {
 public:
  DegeneracyError(std::size_t index, double norm)
      : Error(ErrorKind::degeneracy, "residual " + std::to_string(index) +
                                         " has form-norm " + std::to_string(norm) +
                                         " below the degeneracy threshold"),
        index_(index) {}

  /// 1-based position of the offending basis function.
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace lmf
