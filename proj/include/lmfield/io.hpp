#pragma once

// Artifact persistence: field dumps, CSV tables, JSON reports and the
// SHA-256 manifest of an output directory. Needs OpenSSL (libcrypto).

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "lmfield/config.hpp"
#include "lmfield/errors.hpp"
#include "lmfield/fields.hpp"

namespace lmf::io {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";

/// Shortest round-trip text of a double.
inline std::string fmt(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out.flush()) fail(ErrorKind::io, "write to '" + path.string() + "' failed");
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Header row plus one line per row; cells are already formatted.
inline std::string csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

// ---------------------------------------------------------------------------
// Field dump
//
//   # d=2 h=0.25 window=0,0,8,8 generator=gauss-ma seed=123
//   v,v,v,...        (one lattice row per line, axis 0 along the line)
// ---------------------------------------------------------------------------

inline std::string dump_field(const FieldRealization& f) {
  std::string out = "# d=" + std::to_string(f.dim) + " h=" + fmt(f.spacing) + " window=" +
                    fmt(f.window.lo[0]) + "," + fmt(f.window.lo[1]) + "," + fmt(f.window.hi[0]) +
                    "," + fmt(f.window.hi[1]) + " generator=" + f.generator +
                    " seed=" + std::to_string(f.seed) + "\n";
  for (std::size_t iy = 0; iy < f.ny(); ++iy) {
    for (std::size_t ix = 0; ix < f.nx(); ++ix) {
      if (ix) out += ',';
      out += fmt(f.at(ix, iy));
    }
    out += '\n';
  }
  return out;
}

inline FieldRealization parse_field(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header) || header.rfind("# ", 0) != 0)
    fail(ErrorKind::io, "field dump lacks its header line");
  FieldRealization f;
  std::istringstream hs(header.substr(2));
  std::string tok;
  bool have_d = false, have_h = false, have_w = false;
  try {
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) fail(ErrorKind::io, "bad header token '" + tok + "'");
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "d") f.dim = std::stoi(val), have_d = true;
      else if (key == "h") f.spacing = std::stod(val), have_h = true;
      else if (key == "generator") f.generator = val;
      else if (key == "seed") f.seed = std::stoull(val);
      else if (key == "window") {
        std::array<double, 4> w{};
        std::istringstream ws(val);
        std::string part;
        for (double& x : w) {
          if (!std::getline(ws, part, ',')) fail(ErrorKind::io, "bad window in header");
          x = std::stod(part);
        }
        f.window.lo = {w[0], w[1]};
        f.window.hi = {w[2], w[3]};
        have_w = true;
      }
    }
  } catch (const std::logic_error&) {
    fail(ErrorKind::io, "unparseable field dump header");
  }
  if (!have_d || !have_h || !have_w) fail(ErrorKind::io, "incomplete field dump header");
  if (f.dim != 1 && f.dim != 2) fail(ErrorKind::io, "field dimension must be 1 or 2");
  f.window.dim = f.dim;

  std::string line;
  std::size_t rows = 0, cols = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t n = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const auto comma = std::min(line.find(',', pos), line.size());
      double v = 0.0;
      const auto [p, ec] = std::from_chars(line.data() + pos, line.data() + comma, v);
      if (ec != std::errc{} || p != line.data() + comma) fail(ErrorKind::io, "bad value in field dump");
      f.values.push_back(v);
      ++n;
      pos = comma + 1;
    }
    if (rows == 0) cols = n;
    else if (n != cols) fail(ErrorKind::io, "ragged field dump");
    ++rows;
  }
  if (rows == 0) fail(ErrorKind::io, "field dump has no values");
  if (f.dim == 1 && rows != 1) fail(ErrorKind::io, "1-d field dump must have one row");
  f.shape = {cols, rows};
  return f;
}

inline void write_field(const fs::path& path, const FieldRealization& f) {
  write_text(path, dump_field(f));
}

inline FieldRealization read_field(const fs::path& path) { return parse_field(read_text(path)); }

// ---------------------------------------------------------------------------
// Checksums and artifact directories
// ---------------------------------------------------------------------------

inline std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::io, "SHA-256 computation failed");
  std::ostringstream ss;
  for (unsigned i = 0; i < len; ++i)
    ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return ss.str();
}

/// "<sha256>  <relative path>" lines for every regular file under `dir`
/// except the manifest itself, sorted by path.
inline std::string manifest_text(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) {
      const std::string rel = fs::relative(e.path(), dir).generic_string();
      if (rel != "MANIFEST.sha256") names.push_back(rel);
    }
  std::sort(names.begin(), names.end());
  std::string out;
  for (const auto& n : names) out += sha256_hex(read_text(dir / n)) + "  " + n + "\n";
  return out;
}

/// Output directory of one run. Creates the directory and writes the
/// resolved config and run metadata; finish() writes the manifest. The thread
/// count is dropped from the stored config since results do not depend on it.
class ArtifactDir {
 public:
  ArtifactDir(fs::path dir, const std::string& subcommand, Seed master_seed, const json& config)
      : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) fail(ErrorKind::io, "cannot create '" + dir_.string() + "': " + ec.message());
    json stored = config;
    if (stored.is_object()) stored.erase("threads");
    write_json(dir_ / "config.json", stored);
    write_json(dir_ / "run.json", json{{"tool", "lmfield"},
                                       {"version", kToolVersion},
                                       {"subcommand", subcommand},
                                       {"master_seed", master_seed}});
  }

  const fs::path& path() const { return dir_; }

  void text(const std::string& name, const std::string& content) const {
    write_text(dir_ / name, content);
  }
  void json_file(const std::string& name, const json& j) const { write_json(dir_ / name, j); }

  /// Writes MANIFEST.sha256 and returns its content.
  std::string finish() const {
    const std::string m = manifest_text(dir_);
    write_text(dir_ / "MANIFEST.sha256", m);
    return m;
  }

 private:
  fs::path dir_;
};

}  // namespace lmf::io
