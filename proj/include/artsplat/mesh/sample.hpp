#pragma once

#include <artsplat/core/rng.hpp>
#include <artsplat/mesh/mesh.hpp>

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

namespace artsplat {

// Moller-Trumbore; returns the ray parameter t of the hit.
inline std::optional<double> ray_triangle(const Vec3d& origin, const Vec3d& dir, const Vec3d& a,
                                          const Vec3d& b, const Vec3d& c) {
  constexpr double kEps = 1e-12;
  const Vec3d e1 = b - a, e2 = c - a;
  const Vec3d p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < kEps) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3d s = origin - a;
  const double u = s.dot(p) * inv;
  if (u < 0 || u > 1) return std::nullopt;
  const Vec3d q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < 0 || u + v > 1) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t <= kEps) return std::nullopt;
  return t;
}

inline std::optional<Vec3d> first_hit(const TriangleMesh& mesh, const Vec3d& origin,
                                      const Vec3d& dir) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : mesh.triangles) {
    const auto hit = ray_triangle(origin, dir, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                  mesh.vertices[t[2]]);
    if (hit && *hit < best) best = *hit;
  }
  if (!std::isfinite(best)) return std::nullopt;
  return origin + best * dir;
}

// Surface points by ray casting: origins uniform on a sphere enclosing the
// mesh, targets jittered through the bounding box, first hits kept. Sample
// density is a property of the surface, not of its triangulation, which is
// the point of doing it this way.
inline std::vector<Vec3d> sample_surface_rays(const TriangleMesh& mesh, int n_points,
                                              uint64_t seed) {
  if (n_points <= 0) throw ValidationError("sample_surface_rays: n_points must be positive");
  mesh.validate();
  Vec3d lo, hi;
  mesh.bounding_box(lo, hi);
  const Vec3d center = 0.5 * (lo + hi);
  const double radius = std::max(1e-9, 0.75 * (hi - lo).norm());
  Rng rng(seed);
  std::vector<Vec3d> points;
  points.reserve(n_points);
  const long attempts_budget = 1000 + 400L * n_points;
  for (long attempt = 0; attempt < attempts_budget && int(points.size()) < n_points; ++attempt) {
    const Vec3d origin = center + radius * rng.unit_vector();
    Vec3d target;
    for (int k = 0; k < 3; ++k) target[k] = rng.uniform(lo[k], hi[k]);
    Vec3d dir = target - origin;
    const double len = dir.norm();
    if (len < 1e-12) continue;
    dir /= len;
    if (auto hit = first_hit(mesh, origin, dir)) points.push_back(*hit);
  }
  if (int(points.size()) < n_points)
    throw ValidationError("sample_surface_rays: surface not hittable (collected " +
                          std::to_string(points.size()) + " of " + std::to_string(n_points) + ")");
  return points;
}

// Mean distance to the k nearest neighbors, per point; the pretraining
// initial scale. Quadratic scan, fine at the point counts used here.
inline std::vector<double> knn_mean_distance(const std::vector<Vec3d>& points, int k) {
  const int n = int(points.size());
  if (n < 2) throw ValidationError("knn_mean_distance: need at least 2 points");
  k = std::min(k, n - 1);
  std::vector<double> out(n);
  std::vector<double> d2(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) d2[j] = (points[j] - points[i]).squaredNorm();
    d2[i] = std::numeric_limits<double>::infinity();
    std::partial_sort(d2.begin(), d2.begin() + k, d2.end());
    double sum = 0;
    for (int j = 0; j < k; ++j) sum += std::sqrt(d2[j]);
    out[i] = sum / k;
  }
  return out;
}

}  // namespace artsplat
