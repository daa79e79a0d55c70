#pragma once

#include <artsplat/core/common.hpp>
#include <artsplat/core/grid.hpp>
#include <artsplat/kin/se3.hpp>

#include <optional>
#include <utility>
#include <vector>

namespace artsplat {

// Attributes are stored as f32 (matching the on-disk layout bit for bit);
// all math promotes to double.
struct GaussianPrimitive {
  Vec3f mean = Vec3f::Zero();          // part-local, meters
  Vec4f rotation{1.f, 0.f, 0.f, 0.f};  // unit quaternion (w,x,y,z), w >= 0
  Vec3f log_scale = Vec3f::Zero();     // log of per-axis stddev, meters
  float opacity_logit = 0.f;
  Vec3f color = Vec3f::Zero();         // RGB in [0,1]
  int part_id = 0;

  double opacity() const { return sigmoid(double(opacity_logit)); }
  Vec3d scale() const {
    return {std::exp(double(log_scale.x())), std::exp(double(log_scale.y())),
            std::exp(double(log_scale.z()))};
  }
  Mat3d rotation_matrix() const { return quat_to_mat(rotation.cast<double>()); }
  // Local 3x3 covariance R S S R^T.
  Mat3d covariance() const {
    const Mat3d r = rotation_matrix();
    const Vec3d s2 = scale().array().square();
    return r * s2.asDiagonal() * r.transpose();
  }
};

// Full articulated pose: joint angles plus the shaft-to-camera twist.
struct PoseSet {
  std::array<double, 3> theta{0, 0, 0};  // radians
  Vec6d xi = Vec6d::Zero();              // se(3), translation first

  RigidTransform cam_T_shaft() const { return exp_se3(xi); }

  Vec9d packed() const {
    Vec9d p;
    p << theta[0], theta[1], theta[2], xi;
    return p;
  }
  static PoseSet from_packed(const Vec9d& p) {
    PoseSet q;
    q.theta = {p[0], p[1], p[2]};
    q.xi = p.tail<6>();
    return q;
  }
};

struct Camera {
  double fx = 0, fy = 0, cx = 0, cy = 0;  // pixels
  int width = 0, height = 0;
  double near = 1e-3, far = 100.0;  // meters

  bool is_valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && near > 0 && far > near;
  }
  // Pinhole projection of a camera-frame point (z > 0).
  Vec2d project(const Vec3d& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }
  Vec3d unproject(const Vec2d& px, double depth) const {
    return {(px.x() - cx) / fx * depth, (px.y() - cy) / fy * depth, depth};
  }
};

// One observed (or synthesized) video frame with its labels.
struct Frame {
  GridF rgb;             // H x W x 3 in [0,1]
  GridU8 instrument_mask;  // H x W, 0/1
  GridU8 part_semantics;   // H x W, 0 = background, k = part id
  std::optional<std::vector<Vec2d>> tips_2d;  // <= 2 pixel points, unordered
  std::optional<GridF> depth;                 // H x W meters
  std::optional<std::vector<std::pair<Vec2d, Vec3d>>> correspondences;
  // When set, overrides the one-hot encoding of part_semantics in the
  // silhouette loss; lets a rendered output stand in as its own target.
  std::optional<GridF> soft_semantics;  // H x W x P

  int height() const { return rgb.height(); }
  int width() const { return rgb.width(); }
};

struct OptimConfig {
  // Loss weights.
  double lambda_mask = 0.1;
  double lambda_tip = 1e-4;
  double tip_tolerance_r = 3.0;  // px
  double joint_limit_weight = 1.0;

  // Learning rates (Adam).
  double eta_theta = 1e-2;
  double eta_xi_rot = 1e-2;
  double eta_xi_trans = 1e-3;
  double eta_mean = 1.6e-4;
  double eta_color = 2.5e-3;
  double eta_opacity = 5e-2;
  double eta_rotation = 1e-2;
  double eta_log_scale = 1e-2;

  // Iteration budgets.
  int pretrain_iters = 10000;
  int pose_iters = 2000;
  int warmup_iters = 800;
  int rtl_iters = 5000;
  int refine_steps = 150;  // K

  // Early stop on the pose objective.
  int early_stop_window = 50;
  double early_stop_rel_threshold = 1e-4;

  // Rasterizer controls (tests relax these for smooth finite differences).
  double sigma_cut = 3.0;          // bounding-box radius in sigmas
  double alpha_skip = 1.0 / 255.0; // per-splat alpha threshold
  double t_stop = 1e-4;            // transmittance early-out
  double alpha_max = 0.99;

  bool is_valid() const {
    return lambda_mask >= 0 && lambda_tip >= 0 && tip_tolerance_r >= 0 &&
           eta_theta > 0 && eta_xi_rot > 0 && eta_xi_trans > 0 && pretrain_iters >= 0 &&
           pose_iters >= 0 && warmup_iters >= 0 && rtl_iters >= 0 && refine_steps >= 1 &&
           early_stop_window >= 1 && early_stop_rel_threshold >= 0 && sigma_cut > 0 &&
           alpha_skip >= 0 && t_stop >= 0 && alpha_max > 0 && alpha_max <= 0.999;
  }
};

}  // namespace artsplat
