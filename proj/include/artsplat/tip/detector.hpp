#pragma once

#include <artsplat/core/chain.hpp>
#include <artsplat/core/grid.hpp>

#include <Eigen/Eigenvalues>

#include <limits>
#include <vector>

namespace artsplat {

inline constexpr int kDetectorMinPixels = 10;

// Closed-form tip detection from a part label map: per gripper part, the
// mask pixel with extremal projection onto the principal axis of the pixel
// cloud, choosing the end farther from the wrist. Returns pixel-center
// coordinates; parts that are absent or tiny yield no tip.
inline std::vector<Vec2d> detect_tips_geometric(const GridU8& semantics) {
  struct Cloud {
    std::vector<Vec2d> px;
    Vec2d centroid = Vec2d::Zero();
    void add(double x, double y) { px.emplace_back(x, y); }
    void finish() {
      for (const Vec2d& p : px) centroid += p;
      if (!px.empty()) centroid /= double(px.size());
    }
  };
  Cloud parts[kNumParts];
  Cloud instrument;
  for (int y = 0; y < semantics.height(); ++y)
    for (int x = 0; x < semantics.width(); ++x) {
      const int label = semantics.at(y, x);
      if (label <= 0 || label > kNumParts) continue;
      const double cx = x + 0.5, cy = y + 0.5;
      parts[label - 1].add(cx, cy);
      instrument.add(cx, cy);
    }
  for (auto& c : parts) c.finish();
  instrument.finish();

  // Direction reference: wrist centroid when present, else shaft, else the
  // whole instrument. Without any anchor the tip end is ambiguous.
  Vec2d anchor;
  if (!parts[kWrist].px.empty()) {
    anchor = parts[kWrist].centroid;
  } else if (!parts[kShaft].px.empty()) {
    anchor = parts[kShaft].centroid;
  } else if (!instrument.px.empty()) {
    anchor = instrument.centroid;
  } else {
    return {};
  }

  std::vector<Vec2d> tips;
  for (int part : {kGripperRight, kTooltipLeft}) {
    const Cloud& c = parts[part];
    if (int(c.px.size()) < kDetectorMinPixels) continue;
    Mat2d cov = Mat2d::Zero();
    for (const Vec2d& p : c.px) {
      const Vec2d d = p - c.centroid;
      cov += d * d.transpose();
    }
    cov /= double(c.px.size());
    Eigen::SelfAdjointEigenSolver<Mat2d> eig(cov);
    const Vec2d axis = eig.eigenvectors().col(1);  // largest eigenvalue last
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    Vec2d p_lo = c.centroid, p_hi = c.centroid;
    for (const Vec2d& p : c.px) {
      const double t = axis.dot(p - c.centroid);
      if (t < lo) {
        lo = t;
        p_lo = p;
      }
      if (t > hi) {
        hi = t;
        p_hi = p;
      }
    }
    tips.push_back((p_hi - anchor).squaredNorm() >= (p_lo - anchor).squaredNorm() ? p_hi : p_lo);
  }
  return tips;
}

}  // namespace artsplat
