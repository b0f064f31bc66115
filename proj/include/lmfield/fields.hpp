#pragma once

// Lattice realizations of stationary random fields on axis-aligned windows,
// and the two box-sum generators (Levy noise and Gaussian moving average).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lmfield/errors.hpp"
#include "lmfield/marginal.hpp"
#include "lmfield/meixner.hpp"
#include "lmfield/rng.hpp"

namespace lmf {

/// Axis-aligned box in R^1 or R^2. Unused axes stay at [0, 0].
struct Window {
  int dim = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};

  static Window cube(int d, double side) {
    require(d == 1 || d == 2, ErrorKind::parameter, "dimension must be 1 or 2");
    require(side > 0.0, ErrorKind::parameter, "window side must be positive");
    Window w;
    w.dim = d;
    w.hi[0] = side;
    if (d == 2) w.hi[1] = side;
    return w;
  }

  double side(int axis) const { return hi[axis] - lo[axis]; }

  double volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= side(a);
    return v;
  }

  bool operator==(const Window&) const = default;
};

/// Sites per axis for pitch h: ceil(side / h), tolerant to rounding of side/h.
inline std::size_t lattice_count(double side, double h) {
  const double q = side / h;
  const double r = std::round(q);
  if (std::abs(q - r) <= 1e-9 * std::max(1.0, r)) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(q));
}

/// Number of lattice cells composing a side that must be an exact multiple of h.
inline std::size_t aligned_count(double side, double h, const char* what) {
  require(side > 0.0 && h > 0.0, ErrorKind::parameter, std::string(what) + " must be positive");
  const double q = side / h;
  const double r = std::round(q);
  require(r >= 1.0 && std::abs(q - r) <= 1e-9 * std::max(1.0, r), ErrorKind::alignment,
          std::string(what) + " " + std::to_string(side) + " is not a multiple of h = " +
              std::to_string(h));
  return static_cast<std::size_t>(r);
}

/// A field sampled at the corner lattice lo + i h of a window. Values are
/// row-major with axis 0 varying fastest: values[iy * nx + ix].
struct FieldRealization {
  int dim = 1;
  Window window;
  double spacing = 1.0;
  std::array<std::size_t, 2> shape{0, 1};
  std::vector<double> values;
  std::string generator;
  Seed seed = 0;

  std::size_t nx() const { return shape[0]; }
  std::size_t ny() const { return shape[1]; }
  std::size_t size() const { return values.size(); }

  double at(std::size_t ix, std::size_t iy = 0) const { return values[iy * shape[0] + ix]; }

  std::array<double, 2> site(std::size_t ix, std::size_t iy = 0) const {
    return {window.lo[0] + static_cast<double>(ix) * spacing,
            window.lo[1] + static_cast<double>(iy) * spacing};
  }

  /// h^d, the Riemann weight of one site.
  double cell_volume() const { return dim == 1 ? spacing : spacing * spacing; }

  /// Volume covered by the lattice cells (equals the window volume when the
  /// window sides are multiples of h).
  double lattice_volume() const { return cell_volume() * static_cast<double>(values.size()); }
};

inline FieldRealization empty_realization(const Window& w, double h, std::string generator,
                                          Seed seed) {
  require(w.dim == 1 || w.dim == 2, ErrorKind::parameter, "dimension must be 1 or 2");
  require(h > 0.0 && std::isfinite(h), ErrorKind::parameter, "spacing must be positive");
  for (int a = 0; a < w.dim; ++a)
    require(w.side(a) > 0.0, ErrorKind::parameter, "window must have positive extent");
  FieldRealization f;
  f.dim = w.dim;
  f.window = w;
  f.spacing = h;
  f.shape = {lattice_count(w.side(0), h), w.dim == 2 ? lattice_count(w.side(1), h) : 1};
  f.values.assign(f.shape[0] * f.shape[1], 0.0);
  f.generator = std::move(generator);
  f.seed = seed;
  return f;
}

namespace detail {

// X(site) = sum of noise over the k (per axis) cells starting at the site.
// Noise is laid out on the (nx + k - 1) x (ny + k - 1) extended grid in
// row-major order.
inline void box_sum(FieldRealization& field, const std::vector<double>& noise, std::size_t k) {
  const std::size_t nx = field.nx(), ny = field.ny();
  const std::size_t ex = nx + k - 1;
  if (field.dim == 1) {
    for (std::size_t i = 0; i < nx; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += noise[i + j];
      field.values[i] = s;
    }
    return;
  }
  const std::size_t ey = ny + k - 1;
  std::vector<double> rows(ey * nx);
  for (std::size_t r = 0; r < ey; ++r)
    for (std::size_t i = 0; i < nx; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += noise[r * ex + i + j];
      rows[r * nx + i] = s;
    }
  for (std::size_t r = 0; r < ny; ++r)
    for (std::size_t i = 0; i < nx; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += rows[(r + j) * nx + i];
      field.values[r * nx + i] = s;
    }
}

inline FieldRealization box_sum_field(const PolySystem& family, double base_side,
                                      const Window& window, double h, Seed seed,
                                      std::string generator) {
  const std::size_t k = aligned_count(base_side, h, "base set side");
  FieldRealization field = empty_realization(window, h, std::move(generator), seed);
  const double cell = field.cell_volume();
  const MarginalSampler sampler(with_lambda(family, cell));
  const std::size_t ex = field.nx() + k - 1;
  const std::size_t ey = field.dim == 2 ? field.ny() + k - 1 : 1;
  std::vector<double> noise(ex * ey);
  auto eng = make_engine(seed);
  for (double& v : noise) v = sampler(eng);
  box_sum(field, noise, k);
  return field;
}

}  // namespace detail

/// X(t) = Lambda(B + t) for the Levy noise of `family` and the cube B of side
/// `base_side`; B must be an exact union of lattice cells, in which case every
/// site value is distributed exactly as Psi_{side^d}. The lambda of `family`
/// is ignored (each lattice cell carries Psi_{h^d}).
inline FieldRealization generate_levy_field(const PolySystem& family, double base_side,
                                            const Window& window, double h, Seed seed) {
  return detail::box_sum_field(family, base_side, window, h, seed,
                               std::string("levy-") + to_string(family.family));
}

/// Centered Gaussian moving average with covariance vol(B intersect (B + t)).
inline FieldRealization generate_gaussian_ma_field(double kernel_side, const Window& window,
                                                   double h, Seed seed) {
  return detail::box_sum_field(make_system(Family::normal, 1.0), kernel_side, window, h, seed,
                               "gauss-ma");
}

/// Cov(X(0), X(t)) of both box-sum constructions when the noise has unit
/// variance per unit volume: the overlap volume prod_i (side - |t_i|)_+.
inline double box_overlap(double side, std::span<const double> lag) {
  double v = 1.0;
  for (double t : lag) v *= std::max(0.0, side - std::abs(t));
  return v;
}

}  // namespace lmf
