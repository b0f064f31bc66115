#pragma once

// Test functions f, window integrals of f(X), the normalized functional
// Phi_W(f), Van Hove ratios of cube windows and the slope +-1 covering net.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lmfield/errors.hpp"
#include "lmfield/fields.hpp"
#include "lmfield/meixner.hpp"
#include "lmfield/rng.hpp"

namespace lmf {

struct FuncSpec;

namespace fn {

struct Identity {};

/// Q_degree(x; system) for a Levy-Meixner system.
struct MeixnerPoly {
  unsigned degree = 1;
  PolySystem system;
};

/// x^degree.
struct Monomial {
  unsigned degree = 1;
};

/// Linear interpolation through (breakpoints[i], values[i]), constant outside.
struct PiecewiseLinear {
  std::vector<double> breakpoints;
  std::vector<double> values;
};

/// Continuous ramp from 0 at u - width to 1 at u + width.
struct SmoothedIndicator {
  double u = 0.0;
  double width = 0.1;
};

struct Term;
/// sum_i coef_i * f_i
struct LinearCombination {
  std::vector<Term> terms;
};

}  // namespace fn

/// A serializable real function of one variable.
struct FuncSpec {
  using Variant = std::variant<fn::Identity, fn::MeixnerPoly, fn::Monomial, fn::PiecewiseLinear,
                               fn::SmoothedIndicator, fn::LinearCombination>;
  Variant kind;

  FuncSpec() : kind(fn::Identity{}) {}
  template <class K>
    requires(!std::is_same_v<std::decay_t<K>, FuncSpec> && std::is_constructible_v<Variant, K>)
  FuncSpec(K k) : kind(std::move(k)) {}

  double operator()(double x) const;
};

namespace fn {
struct Term {
  double coef = 1.0;
  FuncSpec f;
};
}  // namespace fn

inline FuncSpec identity_fn() { return fn::Identity{}; }

inline FuncSpec constant_fn(double c) { return fn::PiecewiseLinear{{0.0}, {c}}; }

inline FuncSpec monomial_fn(unsigned degree) { return fn::Monomial{degree}; }

inline FuncSpec meixner_fn(unsigned degree, const PolySystem& s) {
  validate(s);
  return fn::MeixnerPoly{degree, s};
}

inline FuncSpec piecewise_linear_fn(std::vector<double> breakpoints, std::vector<double> values) {
  require(!breakpoints.empty() && breakpoints.size() == values.size(), ErrorKind::parameter,
          "piecewise_linear needs matching, non-empty breakpoints and values");
  for (std::size_t i = 1; i < breakpoints.size(); ++i)
    require(breakpoints[i] > breakpoints[i - 1], ErrorKind::parameter,
            "piecewise_linear breakpoints must be strictly increasing");
  return fn::PiecewiseLinear{std::move(breakpoints), std::move(values)};
}

inline FuncSpec smoothed_indicator_fn(double u, double width) {
  require(width > 0.0, ErrorKind::parameter, "smoothed_indicator width must be positive");
  return fn::SmoothedIndicator{u, width};
}

inline FuncSpec linear_combination(std::vector<fn::Term> terms) {
  return fn::LinearCombination{std::move(terms)};
}

namespace detail {

inline double eval_pwl(const fn::PiecewiseLinear& p, double x) {
  const auto& b = p.breakpoints;
  if (x <= b.front()) return p.values.front();
  if (x >= b.back()) return p.values.back();
  const auto it = std::upper_bound(b.begin(), b.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - b.begin());
  const double t = (x - b[j - 1]) / (b[j] - b[j - 1]);
  return p.values[j - 1] + t * (p.values[j] - p.values[j - 1]);
}

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

}  // namespace detail

inline double FuncSpec::operator()(double x) const {
  return std::visit(
      detail::overloaded{
          [&](const fn::Identity&) { return x; },
          [&](const fn::MeixnerPoly& p) { return eval_poly(p.system, p.degree, x); },
          [&](const fn::Monomial& p) {
            double r = 1.0;
            for (unsigned i = 0; i < p.degree; ++i) r *= x;
            return r;
          },
          [&](const fn::PiecewiseLinear& p) { return detail::eval_pwl(p, x); },
          [&](const fn::SmoothedIndicator& p) {
            return std::clamp((x - p.u + p.width) / (2.0 * p.width), 0.0, 1.0);
          },
          [&](const fn::LinearCombination& c) {
            double s = 0.0;
            for (const auto& t : c.terms) s += t.coef * t.f(x);
            return s;
          }},
      kind);
}

/// Global Lipschitz constant; +inf for polynomials of degree >= 2. For linear
/// combinations this is the bound sum |coef_i| Lip f_i.
inline double lipschitz_constant(const FuncSpec& f) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::visit(
      detail::overloaded{
          [](const fn::Identity&) { return 1.0; },
          [](const fn::MeixnerPoly& p) {
            return p.degree == 0 ? 0.0 : p.degree == 1 ? std::abs(p.system.affine_m) : inf;
          },
          [](const fn::Monomial& p) { return p.degree == 0 ? 0.0 : p.degree == 1 ? 1.0 : inf; },
          [](const fn::PiecewiseLinear& p) {
            double l = 0.0;
            for (std::size_t i = 1; i < p.breakpoints.size(); ++i)
              l = std::max(l, std::abs((p.values[i] - p.values[i - 1]) /
                                       (p.breakpoints[i] - p.breakpoints[i - 1])));
            return l;
          },
          [](const fn::SmoothedIndicator& p) { return 1.0 / (2.0 * p.width); },
          [](const fn::LinearCombination& c) {
            // triangle-inequality bound
            double l = 0.0;
            for (const auto& t : c.terms) l += std::abs(t.coef) * lipschitz_constant(t.f);
            return l;
          }},
      f.kind);
}

/// Lip f + |f(0)|.
inline double lipschitz_norm(const FuncSpec& f) { return lipschitz_constant(f) + std::abs(f(0.0)); }

// ---------------------------------------------------------------------------
// Window integrals
// ---------------------------------------------------------------------------

/// Riemann sum h^d * sum_sites f(X(site)).
inline double window_integral(const FieldRealization& field, const FuncSpec& f) {
  double s = 0.0;
  for (double v : field.values) s += f(v);
  return field.cell_volume() * s;
}

/// (int_W f(X) - vol(W) * mean_f) / sqrt(vol(W)) with vol(W) the lattice volume.
/// The numerator is accumulated as h^d * sum (f(X) - mean_f), so a constant f
/// with its exact mean gives exactly zero.
inline double phi_n(const FieldRealization& field, const FuncSpec& f, double mean_f) {
  require(!field.values.empty(), ErrorKind::parameter, "empty field");
  require(std::isfinite(mean_f), ErrorKind::configuration, "mean of f is not available");
  double s = 0.0;
  for (double v : field.values) s += f(v) - mean_f;
  const double vol = field.lattice_volume();
  return field.cell_volume() * s / std::sqrt(vol);
}

/// int_0^1 f(x) dx, the exact mean of f(X) for the Voronoi volume-fraction
/// field whose marginal is uniform on [0, 1].
inline double uniform_mean(const FuncSpec& f) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double x) { return f(x); }, 0.0, 1.0, 15, 1e-13);
}

// ---------------------------------------------------------------------------
// Van Hove windows
// ---------------------------------------------------------------------------

/// Boundary-to-volume ratio vol(dW + [-1,1]^d) / vol(W) of the cube [0, L]^d:
/// ((L + 2)^d - (L - 2)^d) / L^d for L > 2, (L + 2)^d / L^d otherwise.
inline double van_hove_ratio(double L, int d) {
  require(L > 0.0 && std::isfinite(L), ErrorKind::parameter, "window side must be positive");
  require(d >= 1, ErrorKind::parameter, "dimension must be positive");
  const double outer = std::pow(L + 2.0, d);
  const double inner = L > 2.0 ? std::pow(L - 2.0, d) : 0.0;
  return (outer - inner) / std::pow(L, d);
}

struct WindowSeq {
  int dim = 1;
  std::vector<double> sizes;

  /// True when sizes increase and the Van Hove ratio decreases along them.
  bool is_van_hove_growing() const {
    for (std::size_t k = 1; k < sizes.size(); ++k) {
      if (!(sizes[k] > sizes[k - 1])) return false;
      if (!(van_hove_ratio(sizes[k], dim) < van_hove_ratio(sizes[k - 1], dim))) return false;
    }
    return true;
  }
};

inline WindowSeq default_window_seq(int dim) { return {dim, {8.0, 16.0, 32.0, 64.0}}; }

// ---------------------------------------------------------------------------
// Covering net
// ---------------------------------------------------------------------------

/// The 2^(2m) functions with f(0) = 0, slope +-1 on each [(k-1)c, kc] for
/// k = -m+1..m, constant outside [-mc, mc]. Member i uses slope +1 on
/// interval k exactly when bit (k + m - 1) of i is set.
class LipschitzNet {
 public:
  LipschitzNet(unsigned m, double c) : m_(m), c_(c) {
    require(m >= 1, ErrorKind::parameter, "net size m must be at least 1");
    require(m <= 15, ErrorKind::parameter, "net size m above 15 is not enumerable");
    require(c > 0.0 && std::isfinite(c), ErrorKind::parameter, "net spacing c must be positive");
  }

  unsigned m() const { return m_; }
  double c() const { return c_; }
  std::uint64_t size() const { return std::uint64_t{1} << (2 * m_); }

  /// Slope of member i on the interval [(k-1)c, kc].
  int slope(std::uint64_t i, int k) const {
    return ((i >> static_cast<unsigned>(k + static_cast<int>(m_) - 1)) & 1U) ? 1 : -1;
  }

  /// Values of member i at the grid points kc, k = -m..m (index k + m).
  std::vector<double> grid_values(std::uint64_t i) const {
    const int m = static_cast<int>(m_);
    std::vector<double> v(2 * m_ + 1, 0.0);
    for (int k = 1; k <= m; ++k) v[k + m] = v[k + m - 1] + slope(i, k) * c_;
    for (int k = 0; k > -m; --k) v[k - 1 + m] = v[k + m] - slope(i, k) * c_;
    return v;
  }

  /// Member i as a piecewise-linear FuncSpec.
  FuncSpec member(std::uint64_t i) const {
    const int m = static_cast<int>(m_);
    std::vector<double> b(2 * m_ + 1);
    for (int k = -m; k <= m; ++k) b[k + m] = k * c_;
    return piecewise_linear_fn(std::move(b), grid_values(i));
  }

 private:
  unsigned m_;
  double c_;
};

inline LipschitzNet lipschitz_net(unsigned m, double c) { return LipschitzNet(m, c); }

struct NetMatch {
  std::uint64_t index = 0;
  double max_grid_error = 0.0;
};

namespace detail {

inline void check_net_domain(const FuncSpec& f) {
  require(std::abs(f(0.0)) <= 1e-12, ErrorKind::domain, "net approximation needs f(0) = 0");
  require(lipschitz_constant(f) <= 1.0 + 1e-12, ErrorKind::domain,
          "net approximation needs Lip f <= 1");
}

inline double grid_error(const LipschitzNet& net, std::span<const double> target,
                         std::uint64_t i) {
  const auto v = net.grid_values(i);
  double e = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) e = std::max(e, std::abs(target[k] - v[k]));
  return e;
}

inline std::vector<double> grid_targets(const FuncSpec& f, const LipschitzNet& net) {
  const int m = static_cast<int>(net.m());
  std::vector<double> t(2 * net.m() + 1);
  for (int k = -m; k <= m; ++k) t[k + m] = f(k * net.c());
  return t;
}

}  // namespace detail

/// Random piecewise-linear f with f(0) = 0 and |slope| <= 1: `pieces`
/// segments on each side of 0 with uniform lengths summing to `half_width`,
/// slopes uniform in [-1, 1].
inline FuncSpec random_lipschitz_pwl(Engine& eng, double half_width, std::size_t pieces) {
  require(half_width > 0.0 && pieces >= 1, ErrorKind::parameter, "bad random PWL shape");
  std::uniform_real_distribution<double> slope(-1.0, 1.0), len(0.1, 1.0);
  auto side = [&] {
    std::vector<double> l(pieces);
    for (double& v : l) v = len(eng);
    const double total = std::accumulate(l.begin(), l.end(), 0.0);
    for (double& v : l) v *= half_width / total;
    return l;
  };
  const auto right = side(), left = side();
  std::vector<double> xs{0.0}, ys{0.0};
  for (double l : right) {
    xs.push_back(xs.back() + l);
    ys.push_back(ys.back() + slope(eng) * l);
  }
  std::vector<double> lx{0.0}, ly{0.0};
  for (double l : left) {
    lx.push_back(lx.back() - l);
    ly.push_back(ly.back() + slope(eng) * l);
  }
  std::vector<double> bx(lx.rbegin(), lx.rend() - 1), by(ly.rbegin(), ly.rend() - 1);
  bx.insert(bx.end(), xs.begin(), xs.end());
  by.insert(by.end(), ys.begin(), ys.end());
  return piecewise_linear_fn(std::move(bx), std::move(by));
}

/// Exhaustive search for the member minimising max_k |f(kc) - f_i(kc)|;
/// ties go to the smallest index.
inline NetMatch net_approximation(const FuncSpec& f, const LipschitzNet& net) {
  detail::check_net_domain(f);
  const auto target = detail::grid_targets(f, net);
  NetMatch best{0, std::numeric_limits<double>::infinity()};
  for (std::uint64_t i = 0; i < net.size(); ++i) {
    const double e = detail::grid_error(net, target, i);
    if (e < best.max_grid_error) best = {i, e};
  }
  return best;
}

/// The inductive construction: walking outwards from 0, each slope is chosen
/// to step towards f at the next grid point, which keeps the grid error <= c.
inline NetMatch net_member_by_induction(const FuncSpec& f, const LipschitzNet& net) {
  detail::check_net_domain(f);
  const int m = static_cast<int>(net.m());
  const double c = net.c();
  std::uint64_t index = 0;
  double right = 0.0, left = 0.0;
  for (int step = 1; step <= m; ++step) {
    if (f(step * c) >= right) {
      index |= std::uint64_t{1} << static_cast<unsigned>(step + m - 1);
      right += c;
    } else {
      right -= c;
    }
    // interval k = -step + 1 covers [(-step)c, (-step+1)c]; slope +1 lowers the left end
    const int k = -step + 1;
    if (f(-step * c) <= left) {
      index |= std::uint64_t{1} << static_cast<unsigned>(k + m - 1);
      left -= c;
    } else {
      left += c;
    }
  }
  const auto target = detail::grid_targets(f, net);
  return {index, detail::grid_error(net, target, index)};
}

}  // namespace lmf
