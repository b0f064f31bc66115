#pragma once

// Planar convex-polygon kernel: half-plane clipping and exact disk/polygon
// intersection areas.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "lmfield/errors.hpp"

namespace lmf::geom {

struct Point {
  double x = 0.0;
  double y = 0.0;

  Point operator+(Point o) const { return {x + o.x, y + o.y}; }
  Point operator-(Point o) const { return {x - o.x, y - o.y}; }
  Point operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Point&) const = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Point a) { return dot(a, a); }
inline double norm(Point a) { return std::sqrt(norm2(a)); }

/// Vertices in counter-clockwise order, no repeated closing vertex.
using Polygon = std::vector<Point>;

inline double signed_area(std::span<const Point> poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

inline double area(std::span<const Point> poly) { return std::abs(signed_area(poly)); }

inline double perimeter(std::span<const Point> poly) {
  double p = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) p += norm(poly[(i + 1) % poly.size()] - poly[i]);
  return p;
}

inline Polygon box_polygon(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

/// Keeps the part of `poly` with dot(normal, p) <= offset (Sutherland-Hodgman).
inline Polygon clip_halfplane(std::span<const Point> poly, Point normal, double offset) {
  Polygon out;
  const std::size_t n = poly.size();
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = poly[i];
    const Point b = poly[(i + 1) % n];
    const double da = dot(normal, a) - offset;
    const double db = dot(normal, b) - offset;
    if (da <= 0.0) out.push_back(a);
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      const double t = da / (da - db);
      out.push_back(a + (b - a) * t);
    }
  }
  return out;
}

/// Intersection with the half-plane of points at least as close to `site` as to `other`.
inline Polygon clip_bisector(std::span<const Point> poly, Point site, Point other) {
  const Point normal = other - site;
  const double offset = 0.5 * (norm2(other) - norm2(site));
  return clip_halfplane(poly, normal, offset);
}

inline Polygon clip_to_box(std::span<const Point> poly, double x0, double y0, double x1,
                           double y1) {
  Polygon p(poly.begin(), poly.end());
  p = clip_halfplane(p, {-1.0, 0.0}, -x0);
  p = clip_halfplane(p, {1.0, 0.0}, x1);
  p = clip_halfplane(p, {0.0, -1.0}, -y0);
  p = clip_halfplane(p, {0.0, 1.0}, y1);
  return p;
}

/// Inclusive point-in-convex-polygon test with a small absolute slack.
inline bool contains(std::span<const Point> poly, Point p, double slack = 1e-12) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = poly[i];
    const Point b = poly[(i + 1) % n];
    if (cross(b - a, p - a) < -slack * norm(b - a)) return false;
  }
  return true;
}

namespace detail {

// Signed area of disk(0, r) intersected with triangle (0, a, b).
inline double disk_triangle_area(Point a, Point b, double r) {
  const double r2 = r * r;
  const Point d = b - a;
  const double qa = norm2(d);
  if (qa == 0.0) return 0.0;
  // |a + t d|^2 = r^2  ->  qa t^2 + 2 (a.d) t + |a|^2 - r^2 = 0
  const double qb = dot(a, d);
  const double qc = norm2(a) - r2;
  Point pts[4];
  int np = 0;
  pts[np++] = a;
  const double disc = qb * qb - qa * qc;
  if (disc > 0.0) {
    const double sq = std::sqrt(disc);
    const double t1 = (-qb - sq) / qa;
    const double t2 = (-qb + sq) / qa;
    if (t1 > 0.0 && t1 < 1.0) pts[np++] = a + d * t1;
    if (t2 > 0.0 && t2 < 1.0) pts[np++] = a + d * t2;
  }
  pts[np++] = b;

  double total = 0.0;
  for (int i = 0; i + 1 < np; ++i) {
    const Point p = pts[i];
    const Point q = pts[i + 1];
    const Point mid = (p + q) * 0.5;
    if (norm2(mid) <= r2) {
      total += 0.5 * cross(p, q);
    } else {
      total += 0.5 * r2 * std::atan2(cross(p, q), dot(p, q));
    }
  }
  return total;
}

}  // namespace detail

/// Exact area of poly intersected with the closed disk of `radius` about `center`,
/// by signed decomposition into triangles and circular sectors fanned from
/// the centre.
inline double circle_polygon_area(std::span<const Point> poly, Point center, double radius) {
  require(radius >= 0.0 && std::isfinite(radius), ErrorKind::geometry,
          "radius must be finite and non-negative");
  const double poly_area = signed_area(poly);
  require(poly.size() >= 3 && poly_area != 0.0, ErrorKind::geometry, "degenerate polygon");
  if (radius == 0.0) return 0.0;
  double total = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i)
    total += detail::disk_triangle_area(poly[i] - center, poly[(i + 1) % n] - center, radius);
  const double full = std::abs(poly_area);
  return std::clamp(std::abs(total), 0.0, std::min(full, std::numbers::pi * radius * radius));
}

}  // namespace lmf::geom
