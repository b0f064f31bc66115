#pragma once

// Expectations under, and draws from, the orthogonality law of a PolySystem.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "lmfield/meixner.hpp"
#include "lmfield/rng.hpp"

namespace lmf {

/// E[f(Y)] where Y = (X - c lambda) / m and X ~ Psi_lambda.
///
/// Discrete families are summed term by term until the mass is below 1e-60
/// past the mean; continuous families are integrated by double-exponential
/// quadrature split at the mean.
template <class F>
double expectation(const PolySystem& s, F&& f) {
  validate(s);
  const double m = s.affine_m;
  const double shift = s.affine_c * s.lambda;
  auto g = [&](double x) { return f((x - shift) / m); };

  PolySystem base = s;
  base.affine_m = 1.0;
  base.affine_c = 0.0;
  const double mean = marginal_mean(base);

  if (is_discrete(s.family)) {
    const double sd = std::sqrt(marginal_variance(base));
    double total = 0.0;
    for (long k = 0; k < 10'000'000; ++k) {
      const double kk = static_cast<double>(k);
      const double p = family_pmf(base, kk);
      total += p * g(kk);
      if (kk > mean + 10.0 * sd && p < 1e-60) break;
    }
    return total;
  }

  auto integrand = [&](double x) {
    const double d = family_density(base, x);
    return d == 0.0 ? 0.0 : d * g(x);
  };
  boost::math::quadrature::exp_sinh<double> right;
  const double tol = 1e-14;
  const double upper = right.integrate([&](double x) { return integrand(x); }, mean,
                                       std::numeric_limits<double>::infinity(), tol);
  double lower = 0.0;
  if (s.family == Family::gamma) {
    boost::math::quadrature::tanh_sinh<double> finite;
    lower = finite.integrate(integrand, 0.0, mean, tol);
  } else {
    lower = right.integrate([&](double u) { return integrand(2.0 * mean - u); }, mean,
                            std::numeric_limits<double>::infinity(), tol);
  }
  return upper + lower;
}

/// Gram matrix entry E[Q_i Q_j] under the system's own law.
inline double poly_inner_product(const PolySystem& s, unsigned i, unsigned j) {
  const unsigned n = std::max(i, j);
  return expectation(s, [&](double y) {
    auto q = eval_all(s, n, y);
    return q[i] * q[j];
  });
}

/// Draws from the orthogonality law of a PolySystem.
///
/// Normal, Gamma and Poisson use the standard library samplers; Pascal with
/// real size is drawn as a Gamma-Poisson mixture; Mch is drawn by rejection
/// against a Cauchy envelope centred at the mode whose peak height matches the
/// density there.
class MarginalSampler {
 public:
  static constexpr long max_attempts = 1'000'000;

  explicit MarginalSampler(const PolySystem& s) : sys_(s) {
    validate(s);
    if (s.family == Family::meixner_ch) build_envelope();
  }

  const PolySystem& system() const { return sys_; }

  double operator()(Engine& eng) const {
    return (draw_base(eng) - sys_.affine_c * sys_.lambda) / sys_.affine_m;
  }

  /// Expected number of proposals per Mch draw (the envelope constant).
  double envelope_constant() const { return bound_; }

 private:
  double draw_base(Engine& eng) const {
    const double lam = sys_.lambda;
    switch (sys_.family) {
      case Family::normal: return std::normal_distribution<double>(0.0, std::sqrt(lam))(eng);
      case Family::gamma: return std::gamma_distribution<double>(lam, sys_.fixed_param)(eng);
      case Family::poisson:
        return static_cast<double>(std::poisson_distribution<long>(lam)(eng));
      case Family::pascal: {
        const double g = sys_.fixed_param;
        const double rate = std::gamma_distribution<double>(lam, g / (1.0 - g))(eng);
        if (rate <= 0.0) return 0.0;
        return static_cast<double>(std::poisson_distribution<long>(rate)(eng));
      }
      case Family::meixner_ch: return draw_mch(eng);
    }
    return 0.0;
  }

  double log_target(double x) const { return log_mch_density(sys_.fixed_param, sys_.lambda, x); }

  double log_envelope(double x) const {
    const double z = (x - mode_) / scale_;
    return -std::log(std::numbers::pi * scale_ * (1.0 + z * z));
  }

  void build_envelope() {
    PolySystem base = sys_;
    base.affine_m = 1.0;
    base.affine_c = 0.0;
    const double mean = marginal_mean(base);
    const double sd = std::sqrt(marginal_variance(base));

    // Coarse grid then golden-section refinement of the mode.
    double best = mean, best_val = log_target(mean);
    const int coarse = 1000;
    for (int i = 0; i <= coarse; ++i) {
      const double x = mean - 20.0 * sd + 40.0 * sd * i / coarse;
      const double v = log_target(x);
      if (v > best_val) best_val = v, best = x;
    }
    double lo = best - 40.0 * sd / coarse, hi = best + 40.0 * sd / coarse;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
      const double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
      if (log_target(a) > log_target(b)) hi = b; else lo = a;
    }
    mode_ = 0.5 * (lo + hi);
    scale_ = 1.0 / (std::numbers::pi * std::exp(log_target(mode_)));

    // sup f/g on a sinh-spaced grid that resolves both the peak and the tails.
    const double reach = 80.0 * std::max(sd, scale_);
    const double umax = std::asinh(reach / scale_) + 1.0;
    double log_ratio = -std::numeric_limits<double>::infinity();
    const int fine = 4000;
    for (int i = -fine; i <= fine; ++i) {
      const double x = mode_ + scale_ * std::sinh(umax * i / fine);
      log_ratio = std::max(log_ratio, log_target(x) - log_envelope(x));
    }
    bound_ = std::exp(log_ratio) * 1.05;
  }

  double draw_mch(Engine& eng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (long attempt = 0; attempt < max_attempts; ++attempt) {
      const double x = mode_ + scale_ * std::tan(std::numbers::pi * (unif(eng) - 0.5));
      const double log_accept = log_target(x) - log_envelope(x) - std::log(bound_);
      if (log_accept > 0.0)
        fail(ErrorKind::sampling, "Mch envelope does not dominate the density");
      if (std::log(unif(eng)) < log_accept) return x;
    }
    fail(ErrorKind::sampling, "Mch rejection sampler exceeded the attempt bound");
  }

  PolySystem sys_;
  double mode_ = 0.0;
  double scale_ = 1.0;
  double bound_ = 1.0;
};

/// One deterministic draw given a seed.
inline double sample_marginal(const PolySystem& s, Seed seed) {
  auto eng = make_engine(seed);
  return MarginalSampler(s)(eng);
}

}  // namespace lmf
