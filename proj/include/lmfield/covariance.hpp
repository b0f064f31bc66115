#pragma once

// Estimation of the asymptotic covariance form
//   <f, g> = int Cov(f(X(0)), g(X(t))) dt
// from lattice realizations, the matrix Sigma and Gram-Schmidt
// orthogonalization against the estimated form.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "lmfield/errors.hpp"
#include "lmfield/fields.hpp"
#include "lmfield/functionals.hpp"

namespace lmf {

enum class CovMethod { lag_integration, window_variance };

inline const char* to_string(CovMethod m) {
  return m == CovMethod::lag_integration ? "lag_integration" : "window_variance";
}

struct CovEstimate {
  double value = 0.0;
  double trunc_radius = 0.0;
  double se = std::numeric_limits<double>::quiet_NaN();
  CovMethod method = CovMethod::lag_integration;
};

struct CovOptions {
  CovMethod method = CovMethod::lag_integration;
  /// Lag truncation radius R (Euclidean) for lag integration.
  double trunc_radius = 2.0;
  /// Degeneracy threshold for Gram-Schmidt relative to the largest diagonal.
  double tau_rel = 1e-6;
};

/// Integer lattice offset (in units of h).
using Lag = std::array<long, 2>;

/// All lattice offsets with Euclidean length h |t| <= R, in lexicographic order.
inline std::vector<Lag> lag_ball(int dim, double radius, double h) {
  require(radius >= 0.0 && h > 0.0, ErrorKind::parameter, "lag radius and spacing must be valid");
  const long r = static_cast<long>(std::floor(radius / h + 1e-9));
  const double r2 = (radius / h) * (radius / h) + 1e-9;
  std::vector<Lag> lags;
  const long ry = dim == 2 ? r : 0;
  for (long j = -ry; j <= ry; ++j)
    for (long i = -r; i <= r; ++i)
      if (static_cast<double>(i * i + j * j) <= r2) lags.push_back({i, j});
  return lags;
}

struct LagCov {
  Lag lag;
  double value = 0.0;
  std::size_t pairs = 0;
};

namespace detail {

// Mean over all values of all replicates, accumulated relative to the first
// value so that constant inputs have exactly that constant as mean.
inline double pooled_mean(const std::vector<std::vector<double>>& arrays) {
  if (arrays.empty() || arrays.front().empty()) return 0.0;
  const double ref = arrays.front().front();
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& a : arrays) {
    for (double v : a) s += v - ref;
    n += a.size();
  }
  return ref + s / static_cast<double>(n);
}

inline std::vector<std::vector<double>> transform(std::span<const FieldRealization> reps,
                                                  const FuncSpec& f) {
  std::vector<std::vector<double>> out(reps.size());
  for (std::size_t r = 0; r < reps.size(); ++r) {
    out[r].resize(reps[r].size());
    for (std::size_t i = 0; i < reps[r].size(); ++i) out[r][i] = f(reps[r].values[i]);
  }
  return out;
}

inline void center(std::vector<std::vector<double>>& arrays) {
  const double m = pooled_mean(arrays);
  for (auto& a : arrays)
    for (double& v : a) v -= m;
}

inline void check_replicates(std::span<const FieldRealization> reps) {
  require(!reps.empty(), ErrorKind::sample_size, "no replicates");
  for (const auto& r : reps) {
    require(r.shape == reps.front().shape && r.dim == reps.front().dim &&
                r.spacing == reps.front().spacing,
            ErrorKind::parameter, "replicates must share window and lattice");
  }
}

inline void check_lag(const FieldRealization& shape, const Lag& t) {
  require(std::abs(t[0]) < static_cast<long>(shape.nx()) &&
              std::abs(t[1]) < static_cast<long>(shape.ny()),
          ErrorKind::lag, "lag exceeds the window");
}

// Sum over valid site pairs of a[s] * b[s + t] and the number of such pairs.
inline std::pair<double, std::size_t> lag_product_sum(std::span<const double> a,
                                                      std::span<const double> b, std::size_t nx,
                                                      std::size_t ny, const Lag& t) {
  const long tx = t[0], ty = t[1];
  const long nxl = static_cast<long>(nx), nyl = static_cast<long>(ny);
  const long x0 = std::max(0L, -tx), x1 = std::min(nxl, nxl - tx);
  const long y0 = std::max(0L, -ty), y1 = std::min(nyl, nyl - ty);
  if (x1 <= x0 || y1 <= y0) return {0.0, 0};
  double s = 0.0;
  for (long y = y0; y < y1; ++y) {
    const double* pa = a.data() + y * nxl;
    const double* pb = b.data() + (y + ty) * nxl + tx;
    for (long x = x0; x < x1; ++x) s += pa[x] * pb[x];
  }
  return {s, static_cast<std::size_t>((x1 - x0) * (y1 - y0))};
}

// Per-replicate lag-integrated estimates h^d sum_t C_r(t) on centered arrays.
inline std::vector<double> lag_integrated_per_replicate(
    const std::vector<std::vector<double>>& fa, const std::vector<std::vector<double>>& ga,
    const FieldRealization& shape, std::span<const Lag> lags) {
  std::vector<double> est(fa.size(), 0.0);
  for (std::size_t r = 0; r < fa.size(); ++r) {
    double total = 0.0;
    for (const Lag& t : lags) {
      auto [s, n] = lag_product_sum(fa[r], ga[r], shape.nx(), shape.ny(), t);
      total += s / static_cast<double>(n);
    }
    est[r] = shape.cell_volume() * total;
  }
  return est;
}

inline std::pair<double, double> mean_and_se(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  if (x.size() < 2) return {m, std::numeric_limits<double>::quiet_NaN()};
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

inline void check_radius(const FieldRealization& shape, double radius) {
  for (int a = 0; a < shape.dim; ++a)
    require(radius <= 0.5 * shape.window.side(a) + 1e-12, ErrorKind::lag,
            "truncation radius exceeds the window half-side");
  require(radius >= 0.0, ErrorKind::parameter, "truncation radius must be non-negative");
}

}  // namespace detail

/// Spatial covariance of (f(X(s)), g(X(s + t))) for each lag, averaged over
/// the site pairs with both ends in the window and over replicates. Values
/// are centered by the means pooled over all replicates.
inline std::vector<LagCov> estimate_cov_function(std::span<const FieldRealization> reps,
                                                 const FuncSpec& f, const FuncSpec& g,
                                                 std::span<const Lag> lags) {
  detail::check_replicates(reps);
  const auto& shape = reps.front();
  for (const Lag& t : lags) detail::check_lag(shape, t);
  auto fa = detail::transform(reps, f);
  auto ga = detail::transform(reps, g);
  detail::center(fa);
  detail::center(ga);
  std::vector<LagCov> out;
  out.reserve(lags.size());
  for (const Lag& t : lags) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < reps.size(); ++r) {
      auto [sr, nr] = detail::lag_product_sum(fa[r], ga[r], shape.nx(), shape.ny(), t);
      s += sr;
      n += nr;
    }
    out.push_back({t, s / static_cast<double>(n), n});
  }
  return out;
}

namespace detail {

inline CovEstimate lag_estimate(const std::vector<std::vector<double>>& fa,
                                const std::vector<std::vector<double>>& ga,
                                const FieldRealization& shape, double radius) {
  const auto lags = lag_ball(shape.dim, radius, shape.spacing);
  const auto per_rep = lag_integrated_per_replicate(fa, ga, shape, lags);
  auto [m, se] = mean_and_se(per_rep);
  return {m, radius, se, CovMethod::lag_integration};
}

inline CovEstimate window_estimate(std::span<const FieldRealization> reps, const FuncSpec& f,
                                   const FuncSpec& g) {
  require(reps.size() >= 30, ErrorKind::sample_size,
          "window-variance estimation needs at least 30 replicates, got " +
              std::to_string(reps.size()));
  const std::size_t m = reps.size();
  std::vector<double> fi(m), gi(m);
  for (std::size_t r = 0; r < m; ++r) {
    fi[r] = window_integral(reps[r], f);
    gi[r] = window_integral(reps[r], g);
  }
  const double vol = reps.front().lattice_volume();
  auto centered = [&](std::vector<double>& v) {
    const double ref = v.front();
    double s = 0.0;
    for (double x : v) s += x - ref;
    const double mean = ref + s / static_cast<double>(m);
    for (double& x : v) x -= mean;
  };
  centered(fi);
  centered(gi);
  std::vector<double> prod(m);
  double s = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    prod[r] = fi[r] * gi[r];
    s += prod[r];
  }
  const double value = s / static_cast<double>(m - 1) / vol;
  const double se = mean_and_se(prod).second;
  return {value, 0.0, se / vol, CovMethod::window_variance};
}

}  // namespace detail

/// Estimate of <f, g> with a Monte Carlo standard error.
///
/// lag_integration: h^d sum_{|t| <= R} C(t), the error taken from the spread
/// of the per-replicate sums (needs >= 2 replicates for an SE).
/// window_variance: Cov(int_W f, int_W g) / vol(W) across replicates (>= 30).
inline CovEstimate estimate_bilinear_form(std::span<const FieldRealization> reps,
                                          const FuncSpec& f, const FuncSpec& g,
                                          const CovOptions& opt) {
  detail::check_replicates(reps);
  if (opt.method == CovMethod::window_variance) return detail::window_estimate(reps, f, g);
  detail::check_radius(reps.front(), opt.trunc_radius);
  auto fa = detail::transform(reps, f);
  auto ga = detail::transform(reps, g);
  detail::center(fa);
  detail::center(ga);
  return detail::lag_estimate(fa, ga, reps.front(), opt.trunc_radius);
}

/// Symmetric s x s matrix of estimates, row-major.
struct SigmaMatrix {
  std::size_t s = 0;
  std::vector<CovEstimate> entries;

  const CovEstimate& operator()(std::size_t i, std::size_t j) const { return entries[i * s + j]; }
  CovEstimate& operator()(std::size_t i, std::size_t j) { return entries[i * s + j]; }
  double value(std::size_t i, std::size_t j) const { return (*this)(i, j).value; }
};

/// Sigma-hat with entries symmetrized as the average of the (i,j) and (j,i)
/// estimates.
inline SigmaMatrix sigma_matrix(std::span<const FieldRealization> reps,
                                std::span<const FuncSpec> funcs, const CovOptions& opt) {
  detail::check_replicates(reps);
  const std::size_t s = funcs.size();
  SigmaMatrix out{s, std::vector<CovEstimate>(s * s)};
  if (opt.method == CovMethod::lag_integration) {
    detail::check_radius(reps.front(), opt.trunc_radius);
    std::vector<std::vector<std::vector<double>>> arrays(s);
    for (std::size_t i = 0; i < s; ++i) {
      arrays[i] = detail::transform(reps, funcs[i]);
      detail::center(arrays[i]);
    }
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        out(i, j) = detail::lag_estimate(arrays[i], arrays[j], reps.front(), opt.trunc_radius);
  } else {
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        out(i, j) = detail::window_estimate(reps, funcs[i], funcs[j]);
  }
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i + 1; j < s; ++j) {
      CovEstimate sym = out(i, j);
      sym.value = 0.5 * (out(i, j).value + out(j, i).value);
      sym.se = 0.5 * (out(i, j).se + out(j, i).se);
      out(i, j) = sym;
      out(j, i) = sym;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Gram-Schmidt against the estimated form
// ---------------------------------------------------------------------------

struct OrthogonalBasis {
  std::vector<FuncSpec> inputs;
  /// Row j holds the coefficients of f_j over g_1..g_s (unit lower-triangular).
  std::vector<std::vector<double>> coeffs;
  /// Estimated form on the inputs.
  SigmaMatrix gram;
  /// <f_j, f_j> for the outputs, evaluated through `gram`.
  std::vector<double> norms;

  /// f_j as a linear combination of the inputs.
  FuncSpec output(std::size_t j) const {
    std::vector<fn::Term> terms;
    for (std::size_t k = 0; k <= j; ++k)
      if (coeffs[j][k] != 0.0) terms.push_back({coeffs[j][k], inputs[k]});
    return linear_combination(std::move(terms));
  }

  std::vector<FuncSpec> outputs() const {
    std::vector<FuncSpec> out;
    for (std::size_t j = 0; j < inputs.size(); ++j) out.push_back(output(j));
    return out;
  }
};

/// Form of two coefficient vectors through the Gram matrix.
inline double form_of(const SigmaMatrix& g, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.s; ++i)
    for (std::size_t j = 0; j < g.s; ++j) s += a[i] * g.value(i, j) * b[j];
  return s;
}

/// f_j = g_j - sum_{k<j} <g_j, f_k> / <f_k, f_k> f_k, carried out on the
/// coefficient vectors through the estimated Gram matrix of the inputs
/// (both estimators are bilinear). Raises DegeneracyError naming the first
/// 1-based index whose residual norm is <= tau_rel * max diagonal.
inline OrthogonalBasis gram_schmidt_from_gram(std::vector<FuncSpec> basis, SigmaMatrix gram,
                                              double tau_rel) {
  const std::size_t s = basis.size();
  double scale = 0.0;
  for (std::size_t i = 0; i < s; ++i) scale = std::max(scale, gram.value(i, i));
  const double tau = tau_rel * scale;

  OrthogonalBasis out;
  out.inputs = std::move(basis);
  out.coeffs.assign(s, std::vector<double>(s, 0.0));
  out.norms.assign(s, 0.0);
  for (std::size_t j = 0; j < s; ++j) {
    std::vector<double> e(s, 0.0);
    e[j] = 1.0;
    auto& c = out.coeffs[j];
    c = e;
    for (std::size_t k = 0; k < j; ++k) {
      const double proj = form_of(gram, e, out.coeffs[k]) / out.norms[k];
      for (std::size_t i = 0; i < s; ++i) c[i] -= proj * out.coeffs[k][i];
    }
    out.norms[j] = form_of(gram, c, c);
    if (!(out.norms[j] > tau)) throw DegeneracyError(j + 1, out.norms[j]);
  }
  out.gram = std::move(gram);
  return out;
}

inline OrthogonalBasis gram_schmidt(std::span<const FieldRealization> reps,
                                    std::vector<FuncSpec> basis, const CovOptions& opt) {
  SigmaMatrix gram = sigma_matrix(reps, basis, opt);
  return gram_schmidt_from_gram(std::move(basis), std::move(gram), opt.tau_rel);
}

}  // namespace lmf
