#pragma once

// Poisson-Voronoi volume-fraction field: X(t) is the fraction of the area of
// t's Voronoi cell lying within distance |t - nucleus| of its nucleus.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "lmfield/errors.hpp"
#include "lmfield/fields.hpp"
#include "lmfield/geometry.hpp"
#include "lmfield/rng.hpp"

namespace lmf {

struct VoronoiParams {
  double intensity = 1.0;
  /// Margin around the window in which nuclei are also simulated; defaults
  /// to 4 / sqrt(intensity).
  std::optional<double> guard;
  /// Smallest admissible guard, in units of intensity^(-1/2).
  double min_guard_multiple = 2.0;

  double resolved_guard() const { return guard.value_or(4.0 / std::sqrt(intensity)); }
};

/// Uniform bucket grid over the guarded box for nearest-nucleus queries.
class NucleusIndex {
 public:
  NucleusIndex() = default;

  NucleusIndex(const std::vector<geom::Point>& pts, double x0, double y0, double x1, double y1,
               double bucket)
      : x0_(x0), y0_(y0), bucket_(bucket) {
    nx_ = std::max<long>(1, static_cast<long>(std::ceil((x1 - x0) / bucket)));
    ny_ = std::max<long>(1, static_cast<long>(std::ceil((y1 - y0) / bucket)));
    cells_.assign(static_cast<std::size_t>(nx_ * ny_), {});
    for (std::size_t i = 0; i < pts.size(); ++i) {
      auto [bx, by] = bucket_of(pts[i]);
      cells_[static_cast<std::size_t>(by * nx_ + bx)].push_back(static_cast<std::uint32_t>(i));
    }
  }

  std::pair<long, long> bucket_of(geom::Point p) const {
    long bx = static_cast<long>(std::floor((p.x - x0_) / bucket_));
    long by = static_cast<long>(std::floor((p.y - y0_) / bucket_));
    return {std::clamp(bx, 0L, nx_ - 1), std::clamp(by, 0L, ny_ - 1)};
  }

  long max_ring() const { return std::max(nx_, ny_); }
  double bucket() const { return bucket_; }

  /// Visits every nucleus index in the square ring at Chebyshev distance r
  /// (in buckets) around bucket (bx, by).
  template <class F>
  void for_each_in_ring(long bx, long by, long r, F&& f) const {
    auto visit = [&](long cx, long cy) {
      if (cx < 0 || cy < 0 || cx >= nx_ || cy >= ny_) return;
      for (std::uint32_t i : cells_[static_cast<std::size_t>(cy * nx_ + cx)]) f(i);
    };
    if (r == 0) {
      visit(bx, by);
      return;
    }
    for (long cx = bx - r; cx <= bx + r; ++cx) {
      visit(cx, by - r);
      visit(cx, by + r);
    }
    for (long cy = by - r + 1; cy <= by + r - 1; ++cy) {
      visit(bx - r, cy);
      visit(bx + r, cy);
    }
  }

  /// Nearest nucleus; ties resolved towards the smaller index.
  std::uint32_t nearest(const std::vector<geom::Point>& pts, geom::Point p) const {
    auto [bx, by] = bucket_of(p);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_i = std::numeric_limits<std::uint32_t>::max();
    for (long r = 0; r <= max_ring(); ++r) {
      for_each_in_ring(bx, by, r, [&](std::uint32_t i) {
        const double d = geom::norm2(pts[i] - p);
        if (d < best || (d == best && i < best_i)) best = d, best_i = i;
      });
      // Everything in rings > r is at least r buckets away.
      const double reach = static_cast<double>(r) * bucket_;
      if (best_i != std::numeric_limits<std::uint32_t>::max() && best < reach * reach) break;
    }
    return best_i;
  }

 private:
  double x0_ = 0.0, y0_ = 0.0, bucket_ = 1.0;
  long nx_ = 1, ny_ = 1;
  std::vector<std::vector<std::uint32_t>> cells_;
};

/// Nuclei of a Poisson process on the guarded box and their Voronoi cells,
/// clipped to the guarded box.
struct VoronoiScene {
  Window inner;
  double guard = 0.0;
  double intensity = 1.0;
  std::vector<geom::Point> nuclei;
  std::vector<geom::Polygon> cells;
  std::vector<double> cell_areas;
  /// Number of times the point process came out empty and was redrawn.
  int regenerations = 0;
  NucleusIndex index;

  double gx0() const { return inner.lo[0] - guard; }
  double gy0() const { return inner.lo[1] - guard; }
  double gx1() const { return inner.hi[0] + guard; }
  double gy1() const { return inner.hi[1] + guard; }

  void rebuild_index() {
    index = NucleusIndex(nuclei, gx0(), gy0(), gx1(), gy1(), 1.0 / std::sqrt(intensity));
  }

  std::uint32_t owner(geom::Point t) const { return index.nearest(nuclei, t); }

  /// Pointwise field value at t.
  double value_at(geom::Point t) const {
    const std::uint32_t i = owner(t);
    const double r = geom::norm(t - nuclei[i]);
    const double a = geom::circle_polygon_area(cells[i], nuclei[i], r);
    return std::clamp(a / cell_areas[i], 0.0, 1.0);
  }

  /// Cell of nucleus i intersected with the inner window.
  geom::Polygon inner_part(std::size_t i) const {
    return geom::clip_to_box(cells[i], inner.lo[0], inner.lo[1], inner.hi[0], inner.hi[1]);
  }
};

namespace detail {

// Voronoi cell of nucleus i by half-plane clipping against neighbours taken
// ring by ring. Clipping stops once every unprocessed nucleus is farther than
// twice the current cell radius, which certifies the cell.
inline geom::Polygon voronoi_cell(const VoronoiScene& scene, std::uint32_t i) {
  const geom::Point site = scene.nuclei[i];
  geom::Polygon cell = geom::box_polygon(scene.gx0(), scene.gy0(), scene.gx1(), scene.gy1());
  const auto& idx = scene.index;
  auto [bx, by] = idx.bucket_of(site);
  std::vector<std::pair<double, std::uint32_t>> ring;
  for (long r = 0; r <= idx.max_ring(); ++r) {
    ring.clear();
    idx.for_each_in_ring(bx, by, r, [&](std::uint32_t j) {
      if (j != i) ring.emplace_back(geom::norm2(scene.nuclei[j] - site), j);
    });
    std::sort(ring.begin(), ring.end());
    for (auto [d, j] : ring) cell = geom::clip_bisector(cell, site, scene.nuclei[j]);
    double radius2 = 0.0;
    for (const auto& v : cell) radius2 = std::max(radius2, geom::norm2(v - site));
    const double reach = static_cast<double>(r) * idx.bucket();
    if (4.0 * radius2 <= reach * reach) break;
  }
  return cell;
}

}  // namespace detail

/// Builds the scene: Poisson(intensity * area) nuclei placed uniformly on the
/// guarded box (redrawn with an advanced seed if empty) and all their cells.
inline VoronoiScene build_voronoi_scene(const Window& window, const VoronoiParams& params,
                                        Seed seed) {
  require(window.dim == 2, ErrorKind::parameter, "the Voronoi field is planar (d = 2)");
  require(params.intensity > 0.0 && std::isfinite(params.intensity), ErrorKind::parameter,
          "intensity must be positive");
  const double guard = params.resolved_guard();
  require(guard >= params.min_guard_multiple / std::sqrt(params.intensity), ErrorKind::parameter,
          "guard margin is below the configured multiple of intensity^(-1/2)");

  VoronoiScene scene;
  scene.inner = window;
  scene.guard = guard;
  scene.intensity = params.intensity;
  const double w = scene.gx1() - scene.gx0();
  const double hgt = scene.gy1() - scene.gy0();

  for (int attempt = 0;; ++attempt) {
    auto eng = make_engine(attempt == 0 ? seed : derive_seed(seed, attempt, 0x766f726fULL));
    const long n = std::poisson_distribution<long>(params.intensity * w * hgt)(eng);
    if (n == 0) {
      require(attempt < 1000, ErrorKind::sampling, "point process stayed empty");
      ++scene.regenerations;
      continue;
    }
    std::uniform_real_distribution<double> ux(scene.gx0(), scene.gx1());
    std::uniform_real_distribution<double> uy(scene.gy0(), scene.gy1());
    scene.nuclei.resize(static_cast<std::size_t>(n));
    for (auto& p : scene.nuclei) {
      p.x = ux(eng);
      p.y = uy(eng);
    }
    break;
  }
  scene.rebuild_index();
  scene.cells.resize(scene.nuclei.size());
  scene.cell_areas.resize(scene.nuclei.size());
  for (std::uint32_t i = 0; i < scene.nuclei.size(); ++i) {
    scene.cells[i] = detail::voronoi_cell(scene, i);
    scene.cell_areas[i] = geom::area(scene.cells[i]);
  }
  return scene;
}

/// Samples the volume-fraction field of `scene` on the corner lattice of its
/// window.
inline FieldRealization sample_voronoi_field(const VoronoiScene& scene, double h, Seed seed) {
  FieldRealization field = empty_realization(scene.inner, h, "voronoi", seed);
  for (std::size_t iy = 0; iy < field.ny(); ++iy)
    for (std::size_t ix = 0; ix < field.nx(); ++ix) {
      auto s = field.site(ix, iy);
      field.values[iy * field.nx() + ix] = scene.value_at({s[0], s[1]});
    }
  return field;
}

inline std::pair<FieldRealization, VoronoiScene> generate_voronoi_field(
    const Window& window, const VoronoiParams& params, double h, Seed seed) {
  VoronoiScene scene = build_voronoi_scene(window, params, seed);
  FieldRealization field = sample_voronoi_field(scene, h, seed);
  return {std::move(field), std::move(scene)};
}

}  // namespace lmf
