#pragma once

#include <artsplat/core/types.hpp>

#include <optional>

namespace artsplat {

using Mat23d = Eigen::Matrix<double, 2, 3>;

// Screen-space footprint of one splat after EWA projection.
struct ProjectedGaussian {
  Vec2d mean2d = Vec2d::Zero();   // pixels, continuous coords
  Mat2d cov2d = Mat2d::Zero();    // pixels^2, includes the low-pass guard
  double depth = 0;               // camera-frame z of the mean
  double opacity = 0;
  Vec3d color = Vec3d::Zero();
  int part_id = 0;
  int source_index = 0;           // position in the model's flat array
};

// Diagonal added to cov2d so every splat covers at least a fraction of a
// pixel (standard anti-aliasing guard).
inline constexpr double kLowPassPx2 = 0.3;

// Jacobian of the pinhole projection at camera-frame point p.
inline Mat23d projection_jacobian(const Camera& cam, const Vec3d& p) {
  const double iz = 1.0 / p.z();
  const double iz2 = iz * iz;
  Mat23d j;
  j << cam.fx * iz, 0, -cam.fx * p.x() * iz2,
       0, cam.fy * iz, -cam.fy * p.y() * iz2;
  return j;
}

// d(projection_jacobian)/d(p[axis]); needed because the EWA covariance is a
// function of the mean through J.
inline Mat23d projection_jacobian_deriv(const Camera& cam, const Vec3d& p, int axis) {
  const double iz = 1.0 / p.z();
  const double iz2 = iz * iz;
  Mat23d d = Mat23d::Zero();
  if (axis == 0) {
    d(0, 2) = -cam.fx * iz2;
  } else if (axis == 1) {
    d(1, 2) = -cam.fy * iz2;
  } else {
    d(0, 0) = -cam.fx * iz2;
    d(0, 2) = 2.0 * cam.fx * p.x() * iz2 * iz;
    d(1, 1) = -cam.fy * iz2;
    d(1, 2) = 2.0 * cam.fy * p.y() * iz2 * iz;
  }
  return d;
}

// EWA projection of a camera-frame mean and 3x3 covariance. Splats at or
// behind the near plane are culled.
inline std::optional<ProjectedGaussian> project(const Camera& cam, const Vec3d& mean_cam,
                                                const Mat3d& cov_cam) {
  if (!(mean_cam.z() > cam.near)) return std::nullopt;
  ProjectedGaussian out;
  out.depth = mean_cam.z();
  out.mean2d = cam.project(mean_cam);
  const Mat23d j = projection_jacobian(cam, mean_cam);
  out.cov2d = j * cov_cam * j.transpose();
  out.cov2d(0, 0) += kLowPassPx2;
  out.cov2d(1, 1) += kLowPassPx2;
  return out;
}

}  // namespace artsplat
