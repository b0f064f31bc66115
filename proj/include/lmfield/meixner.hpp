#pragma once

// Levy-Meixner systems: the five convolution families of laws whose monic
// orthogonal polynomials have an exponential generating function
// b(a(z))^(-lambda) exp(x a(z)), together with their affine images
// x -> Q_n(m x + c lambda; lambda).

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "lmfield/complex_gamma.hpp"
#include "lmfield/errors.hpp"

namespace lmf {

enum class Family { normal, gamma, poisson, pascal, meixner_ch };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::normal: return "normal";
    case Family::gamma: return "gamma";
    case Family::poisson: return "poisson";
    case Family::pascal: return "pascal";
    case Family::meixner_ch: return "meixner_ch";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  if (s == "normal" || s == "gauss" || s == "hermite") return Family::normal;
  if (s == "gamma" || s == "laguerre") return Family::gamma;
  if (s == "poisson" || s == "charlier") return Family::poisson;
  if (s == "pascal" || s == "negative_binomial" || s == "meixner") return Family::pascal;
  if (s == "meixner_ch" || s == "mch" || s == "pollaczek") return Family::meixner_ch;
  fail(ErrorKind::parameter, "unknown family '" + std::string(s) + "'");
}

inline bool is_discrete(Family f) { return f == Family::poisson || f == Family::pascal; }

/// Default value of the family's fixed parameter: Gamma scale 1, Mch a = 0.
/// Pascal has no sensible default and Normal/Poisson ignore it.
inline double default_fixed_param(Family f) {
  switch (f) {
    case Family::gamma: return 1.0;
    case Family::pascal: return 0.5;
    default: return 0.0;
  }
}

/// One member Psi_lambda of a Levy-Meixner family plus an optional affine map.
///
/// Parameterizations (each a convolution semigroup in lambda):
///   normal      N(0, lambda)                               fixed_param unused
///   gamma       shape lambda, scale fixed_param (> 0)
///   poisson     mean lambda                                fixed_param unused
///   pascal      P(X=k) = (lambda)_k g^k (1-g)^lambda / k!, g = fixed_param in (0,1)
///   meixner_ch  Mch(a, lambda), a = fixed_param in (-pi, pi)
///
/// With (affine_m, affine_c) != (1, 0) the polynomials are x -> Q_n(m x + c lambda)
/// and the orthogonality law is that of (X - c lambda) / m with X ~ Psi_lambda.
struct PolySystem {
  Family family = Family::normal;
  double lambda = 1.0;
  double fixed_param = 0.0;
  double affine_m = 1.0;
  double affine_c = 0.0;

  bool is_affine_identity() const { return affine_m == 1.0 && affine_c == 0.0; }
  bool operator==(const PolySystem&) const = default;
};

inline void validate(const PolySystem& s) {
  require(std::isfinite(s.lambda) && s.lambda > 0.0, ErrorKind::parameter,
          "lambda must be positive, got " + std::to_string(s.lambda));
  require(std::isfinite(s.affine_m) && s.affine_m != 0.0, ErrorKind::parameter,
          "affine factor m must be nonzero");
  require(std::isfinite(s.affine_c), ErrorKind::parameter, "affine shift c must be finite");
  switch (s.family) {
    case Family::gamma:
      require(s.fixed_param > 0.0, ErrorKind::parameter, "gamma scale must be positive");
      break;
    case Family::pascal:
      require(s.fixed_param > 0.0 && s.fixed_param < 1.0, ErrorKind::parameter,
              "pascal probability parameter must lie in (0,1)");
      break;
    case Family::meixner_ch:
      require(std::abs(s.fixed_param) < std::numbers::pi, ErrorKind::parameter,
              "meixner_ch parameter a must lie in (-pi, pi)");
      break;
    default: break;
  }
}

inline PolySystem make_system(Family family, double lambda,
                              std::optional<double> fixed_param = std::nullopt) {
  PolySystem s{family, lambda, fixed_param.value_or(default_fixed_param(family)), 1.0, 0.0};
  validate(s);
  return s;
}

/// Same family and fixed parameter, different lambda (affine map carried over).
inline PolySystem with_lambda(PolySystem s, double lambda) {
  s.lambda = lambda;
  validate(s);
  return s;
}

/// System with polynomials x -> Q_n(m x + c lambda; lambda) of `s`.
/// Composition: transforming by (m1,c1) then (m2,c2) equals (m1 m2, m1 c2 + c1).
inline PolySystem affine_transform(const PolySystem& s, double m, double c) {
  require(std::isfinite(m) && m != 0.0, ErrorKind::parameter, "affine factor m must be nonzero");
  PolySystem out = s;
  out.affine_m = s.affine_m * m;
  out.affine_c = s.affine_m * c + s.affine_c;
  validate(out);
  return out;
}

// ---------------------------------------------------------------------------
// Recurrence coefficients
// ---------------------------------------------------------------------------

/// Monic three-term recurrence Q_{n+1} = (x - alpha_n) Q_n - beta_n Q_{n-1}.
/// beta[0] holds the total mass (1) so alpha and beta have equal length.
template <class T>
struct RecurrenceCoeffsT {
  std::vector<T> alpha;
  std::vector<T> beta;
};
using RecurrenceCoeffs = RecurrenceCoeffsT<double>;

/// Closed-form (alpha_n, beta_n) of the untransformed family at index n.
/// Works for any field type T; meixner_ch needs trigonometry and is only
/// available for floating-point T.
template <class T>
std::pair<T, T> closed_form_coeff(Family family, const T& lambda, const T& param, unsigned n) {
  const T nn = T(n);
  switch (family) {
    case Family::normal:
      return {T(0), nn * lambda};
    case Family::gamma:
      // generalized Laguerre with alpha = lambda - 1, rescaled by theta
      return {param * (T(2) * nn + lambda), param * param * nn * (nn + lambda - T(1))};
    case Family::poisson:
      return {nn + lambda, nn * lambda};
    case Family::pascal: {
      const T one_minus = T(1) - param;
      return {(nn + (nn + lambda) * param) / one_minus,
              nn * (nn + lambda - T(1)) * param / (one_minus * one_minus)};
    }
    case Family::meixner_ch:
      if constexpr (std::is_floating_point_v<T>) {
        using std::cos;
        using std::tan;
        const T half = param / T(2);
        const T c = cos(half);
        return {(nn + lambda) * tan(half), nn * (nn + T(2) * lambda - T(1)) / (T(4) * c * c)};
      } else {
        fail(ErrorKind::parameter, "meixner_ch coefficients are not rational");
      }
  }
  fail(ErrorKind::parameter, "unknown family");
}

template <class T>
RecurrenceCoeffsT<T> closed_form_coeffs(Family family, const T& lambda, const T& param,
                                        unsigned n_max) {
  RecurrenceCoeffsT<T> rc;
  rc.alpha.reserve(n_max + 1);
  rc.beta.reserve(n_max + 1);
  for (unsigned n = 0; n <= n_max; ++n) {
    auto [a, b] = closed_form_coeff<T>(family, lambda, param, n);
    rc.alpha.push_back(a);
    rc.beta.push_back(n == 0 ? T(1) : b);
  }
  return rc;
}

/// Monic recurrence of the system's orthogonality law (affine map applied).
inline RecurrenceCoeffs recurrence_coeffs(const PolySystem& s, unsigned n_max) {
  validate(s);
  auto rc = closed_form_coeffs<double>(s.family, s.lambda, s.fixed_param, n_max);
  if (!s.is_affine_identity()) {
    const double shift = s.affine_c * s.lambda;
    for (unsigned n = 0; n <= n_max; ++n) {
      rc.alpha[n] = (rc.alpha[n] - shift) / s.affine_m;
      if (n > 0) rc.beta[n] /= s.affine_m * s.affine_m;
    }
  }
  return rc;
}

/// Q_0..Q_n at x. For affine systems these are Q_k(m x + c lambda), whose
/// leading coefficient is m^k.
inline std::vector<double> eval_all(const PolySystem& s, unsigned n, double x) {
  validate(s);
  const double y = s.affine_m * x + s.affine_c * s.lambda;
  std::vector<double> q(n + 1);
  q[0] = 1.0;
  if (n == 0) return q;
  q[1] = y - closed_form_coeff<double>(s.family, s.lambda, s.fixed_param, 0).first;
  for (unsigned k = 1; k < n; ++k) {
    auto [a, b] = closed_form_coeff<double>(s.family, s.lambda, s.fixed_param, k);
    q[k + 1] = (y - a) * q[k] - b * q[k - 1];
  }
  return q;
}

inline double eval_poly(const PolySystem& s, unsigned n, double x) { return eval_all(s, n, x)[n]; }

/// E[Q_n(Y)^2] under the system's orthogonality law: the product
/// beta_1..beta_n of the untransformed family (an affine map only relabels
/// the argument, Q_n(m Y + c lambda) = Q_n(X)).
inline double poly_norm2(const PolySystem& s, unsigned n) {
  validate(s);
  double p = 1.0;
  for (unsigned k = 1; k <= n; ++k)
    p *= closed_form_coeff<double>(s.family, s.lambda, s.fixed_param, k).second;
  return p;
}

// ---------------------------------------------------------------------------
// Laws
// ---------------------------------------------------------------------------

/// Mean and variance of the orthogonality law.
inline double marginal_mean(const PolySystem& s) { return recurrence_coeffs(s, 1).alpha[0]; }
inline double marginal_variance(const PolySystem& s) { return recurrence_coeffs(s, 1).beta[1]; }

/// Moment generating function E exp(t Y) of the orthogonality law; +inf
/// outside the domain of convergence. For the untransformed system this is
/// b(t)^lambda.
inline double mgf(const PolySystem& s, double t) {
  validate(s);
  const double inf = std::numeric_limits<double>::infinity();
  const double u = t / s.affine_m;
  const double lam = s.lambda;
  const double p = s.fixed_param;
  double log_m = 0.0;
  switch (s.family) {
    case Family::normal: log_m = lam * u * u / 2.0; break;
    case Family::gamma:
      if (p * u >= 1.0) return inf;
      log_m = -lam * std::log1p(-p * u);
      break;
    case Family::poisson: log_m = lam * std::expm1(u); break;
    case Family::pascal: {
      const double d = 1.0 - p * std::exp(u);
      if (d <= 0.0) return inf;
      log_m = lam * (std::log1p(-p) - std::log(d));
      break;
    }
    case Family::meixner_ch: {
      if (std::abs(u + p) >= std::numbers::pi) return inf;
      log_m = 2.0 * lam * (std::log(std::cos(p / 2.0)) - std::log(std::cos((u + p) / 2.0)));
      break;
    }
  }
  return std::exp(log_m - u * s.affine_c * lam);
}

/// Mch(a, mu) density (2 cos(a/2))^(2 mu) / (2 pi Gamma(2 mu)) e^(a x) |Gamma(mu + i x)|^2.
inline double log_mch_density(double a, double mu, double x) {
  return 2.0 * mu * std::log(2.0 * std::cos(a / 2.0)) - std::log(2.0 * std::numbers::pi) -
         std::lgamma(2.0 * mu) + a * x + log_gamma_abs2(mu, x);
}

inline double mch_density(double a, double mu, double x) {
  require(std::abs(a) < std::numbers::pi, ErrorKind::parameter, "a must lie in (-pi, pi)");
  require(mu > 0.0, ErrorKind::parameter, "mu must be positive");
  return std::exp(log_mch_density(a, mu, x));
}

/// Density (continuous families) of the untransformed law at x.
inline double family_density(const PolySystem& s, double x) {
  const double lam = s.lambda;
  switch (s.family) {
    case Family::normal:
      return std::exp(-x * x / (2.0 * lam)) / std::sqrt(2.0 * std::numbers::pi * lam);
    case Family::gamma: {
      if (x <= 0.0) return 0.0;
      const double th = s.fixed_param;
      return std::exp((lam - 1.0) * std::log(x) - x / th - std::lgamma(lam) - lam * std::log(th));
    }
    case Family::meixner_ch: return mch_density(s.fixed_param, lam, x);
    default: fail(ErrorKind::parameter, "family_density called for a discrete family");
  }
}

/// Probability mass (discrete families) of the untransformed law at k >= 0.
inline double family_pmf(const PolySystem& s, double k) {
  const double lam = s.lambda;
  switch (s.family) {
    case Family::poisson: return std::exp(k * std::log(lam) - lam - std::lgamma(k + 1.0));
    case Family::pascal: {
      const double g = s.fixed_param;
      return std::exp(std::lgamma(k + lam) - std::lgamma(lam) - std::lgamma(k + 1.0) +
                      k * std::log(g) + lam * std::log1p(-g));
    }
    default: fail(ErrorKind::parameter, "family_pmf called for a continuous family");
  }
}

}  // namespace lmf
