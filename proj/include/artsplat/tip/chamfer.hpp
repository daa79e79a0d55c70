#pragma once

#include <artsplat/core/common.hpp>

#include <limits>
#include <vector>

namespace artsplat {

// Symmetric mean-of-squared-nearest-neighbor distance between 2D point sets.
inline double chamfer_distance(const std::vector<Vec2d>& a, const std::vector<Vec2d>& b) {
  if (a.empty() || b.empty()) throw ValidationError("chamfer_distance: empty point set");
  auto one_way = [](const std::vector<Vec2d>& from, const std::vector<Vec2d>& to) {
    double sum = 0;
    for (const Vec2d& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec2d& q : to) best = std::min(best, (p - q).squaredNorm());
      sum += best;
    }
    return sum / double(from.size());
  };
  return one_way(a, b) + one_way(b, a);
}

struct TipLossResult {
  double loss = 0;
  std::vector<Vec2d> d_rendered;  // aligned with the rendered set
  bool evaluated = false;         // false when either set was empty
};

// Truncated symmetric nearest-neighbor tip loss. Both directions apply
// rho(d) = max(d - r, 0) to the nearest-neighbor distance, so small
// localization noise inside the tolerance radius contributes nothing (and
// has exactly zero gradient). Only the rendered points receive gradients;
// observed tips are data.
inline TipLossResult tip_loss(const std::vector<Vec2d>& rendered,
                              const std::vector<Vec2d>& observed, double r) {
  if (r < 0) throw ValidationError("tip_loss: tolerance radius must be >= 0");
  TipLossResult res;
  res.d_rendered.assign(rendered.size(), Vec2d::Zero());
  if (rendered.empty() || observed.empty()) return res;
  res.evaluated = true;

  // Rendered -> observed.
  for (size_t i = 0; i < rendered.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    size_t jbest = 0;
    for (size_t j = 0; j < observed.size(); ++j) {
      const double d = (rendered[i] - observed[j]).norm();
      if (d < best) {
        best = d;
        jbest = j;
      }
    }
    if (best > r) {
      res.loss += best - r;
      res.d_rendered[i] += (rendered[i] - observed[jbest]) / best;
    }
  }
  // Observed -> rendered; the gradient lands on the matched rendered point.
  for (size_t j = 0; j < observed.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    size_t ibest = 0;
    for (size_t i = 0; i < rendered.size(); ++i) {
      const double d = (observed[j] - rendered[i]).norm();
      if (d < best) {
        best = d;
        ibest = i;
      }
    }
    if (best > r) {
      res.loss += best - r;
      res.d_rendered[ibest] += (rendered[ibest] - observed[j]) / best;
    }
  }
  return res;
}

}  // namespace artsplat
