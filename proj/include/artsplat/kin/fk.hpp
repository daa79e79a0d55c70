#pragma once

#include <artsplat/core/chain.hpp>
#include <artsplat/core/model.hpp>
#include <artsplat/core/types.hpp>
#include <artsplat/kin/se3.hpp>

#include <array>
#include <vector>

namespace artsplat {

// Shaft-frame transforms of all four parts for joint angles theta.
// Nesting: wrist after joint 1, right gripper after joint 2 on the wrist,
// left tooltip after joint 3 on the right gripper; the shaft is the root.
inline std::array<RigidTransform, kNumParts> forward_kinematics(
    const KinematicChain& chain, const std::array<double, 3>& theta) {
  std::array<RigidTransform, kNumParts> t;
  t[kShaft] = RigidTransform::identity();
  RigidTransform cur = t[kShaft];
  for (int j = 0; j < kNumJoints; ++j) {
    const JointSpec& js = chain.joints[j];
    RigidTransform rot{so3_exp(js.axis * theta[j]), Vec3d::Zero()};
    cur = cur.compose(js.frame).compose(rot);
    t[j + 1] = cur;
  }
  return t;
}

inline RigidTransform pose_part_to_camera(const KinematicChain& chain, const PoseSet& q,
                                          int part_id) {
  if (part_id < 0 || part_id >= kNumParts)
    throw ValidationError("pose_part_to_camera: unknown part " + std::to_string(part_id));
  return q.cam_T_shaft().compose(forward_kinematics(chain, q.theta)[part_id]);
}

// Pose parameter order used everywhere: (theta1, theta2, theta3, xi1..xi6)
// with xi translation first. The xi derivatives are taken under a left
// perturbation exp(delta) * cam_T_shaft at delta = 0, so d t / d xi_trans is
// exactly the identity and d R / d xi_trans is zero.
inline constexpr int kPoseParams = 9;

struct PosedPartDerivs {
  RigidTransform T;                          // part-local -> camera
  std::array<Mat3d, kPoseParams> d_rotation;
  std::array<Vec3d, kPoseParams> d_translation;
  std::array<bool, kPoseParams> active;      // false => both derivatives exactly zero
};

inline std::array<PosedPartDerivs, kNumParts> pose_part_derivs(const KinematicChain& chain,
                                                               const PoseSet& q) {
  // Shaft-frame chain with per-theta derivative propagation.
  struct Accum {
    RigidTransform T;
    std::array<Mat3d, 3> dR;
    std::array<Vec3d, 3> dt;
  };
  std::array<Accum, kNumParts> shaft{};
  shaft[kShaft].T = RigidTransform::identity();
  for (auto& m : shaft[kShaft].dR) m.setZero();
  for (auto& v : shaft[kShaft].dt) v.setZero();

  Accum cur = shaft[kShaft];
  for (int j = 0; j < kNumJoints; ++j) {
    const JointSpec& js = chain.joints[j];
    const Mat3d rot = so3_exp(js.axis * q.theta[j]);
    const Mat3d drot = skew(js.axis) * rot;  // d/dtheta Rot(axis, theta)
    RigidTransform link{js.frame.rotation * rot,
                        js.frame.translation};
    Accum next;
    next.T = cur.T.compose(link);
    for (int k = 0; k < 3; ++k) {
      if (k < j) {  // earlier joint: derivative flows through the prefix
        next.dR[k] = cur.dR[k] * link.rotation;
        next.dt[k] = cur.dR[k] * link.translation + cur.dt[k];
      } else if (k == j) {  // this joint: prefix is constant
        next.dR[k] = cur.T.rotation * js.frame.rotation * drot;
        next.dt[k].setZero();
      } else {
        next.dR[k].setZero();
        next.dt[k].setZero();
      }
    }
    cur = next;
    shaft[j + 1] = cur;
  }

  const RigidTransform cam = q.cam_T_shaft();
  std::array<PosedPartDerivs, kNumParts> out;
  for (int p = 0; p < kNumParts; ++p) {
    PosedPartDerivs& d = out[p];
    d.T = cam.compose(shaft[p].T);
    for (int k = 0; k < kPoseParams; ++k) {
      d.d_rotation[k].setZero();
      d.d_translation[k].setZero();
      d.active[k] = false;
    }
    // Joint columns: active only on the part's sub-chain (joint k drives
    // parts with id > k).
    for (int k = 0; k < 3; ++k) {
      if (p <= k) continue;
      d.active[k] = true;
      d.d_rotation[k] = cam.rotation * shaft[p].dR[k];
      d.d_translation[k] = cam.rotation * shaft[p].dt[k];
    }
    // Left-perturbation xi columns: translation gives dt = e_k, rotation
    // gives dR = [e_k]x R and dt = e_k x t.
    for (int k = 0; k < 3; ++k) {
      d.active[3 + k] = true;
      d.d_translation[3 + k] = Vec3d::Unit(k);
      Vec3d e = Vec3d::Unit(k);
      d.active[6 + k] = true;
      d.d_rotation[6 + k] = skew(e) * d.T.rotation;
      d.d_translation[6 + k] = e.cross(d.T.translation);
    }
  }
  return out;
}

using PoseJacobian = Eigen::Matrix<double, 3, kPoseParams>;

// d(camera-frame point)/d(pose params) for a fixed part-local point.
inline PoseJacobian point_pose_jacobian(const KinematicChain& chain, const PoseSet& q,
                                        int part_id, const Vec3d& local_point) {
  if (part_id < 0 || part_id >= kNumParts)
    throw ValidationError("point_pose_jacobian: unknown part " + std::to_string(part_id));
  const auto derivs = pose_part_derivs(chain, q);
  const PosedPartDerivs& d = derivs[part_id];
  PoseJacobian jac = PoseJacobian::Zero();
  for (int k = 0; k < kPoseParams; ++k) {
    if (!d.active[k]) continue;
    jac.col(k) = d.d_rotation[k] * local_point + d.d_translation[k];
  }
  return jac;
}

// Apply the current pose to every primitive. Scales, opacities and colors
// ride along untouched; rotations are composed in quaternion form and
// re-canonicalized.
struct PosedGaussian {
  Vec3d mean_cam;
  Vec4d rotation_cam;  // unit quaternion (w,x,y,z), w >= 0
};

inline std::vector<PosedGaussian> pose_gaussians(const ArticulatedGaussianModel& model,
                                                 const PoseSet& q) {
  const auto fk = forward_kinematics(model.chain(), q.theta);
  const RigidTransform cam = q.cam_T_shaft();
  std::array<RigidTransform, kNumParts> part_T;
  std::array<Vec4d, kNumParts> part_quat;
  for (int p = 0; p < kNumParts; ++p) {
    part_T[p] = cam.compose(fk[p]);
    part_quat[p] = mat_to_quat(part_T[p].rotation);
  }
  std::vector<PosedGaussian> out;
  out.reserve(model.size());
  for (const GaussianPrimitive& g : model.primitives()) {
    PosedGaussian pg;
    pg.mean_cam = part_T[g.part_id].apply(g.mean.cast<double>());
    pg.rotation_cam = quat_canonical(quat_mul(part_quat[g.part_id], g.rotation.cast<double>()));
    out.push_back(pg);
  }
  return out;
}

struct TipProjection {
  int part_id = -1;
  Vec3d point_cam = Vec3d::Zero();
  Vec2d pixel = Vec2d::Zero();
  bool visible = false;
};

// Camera-frame positions and projections of the two tool tips. A tip at or
// behind the near plane is flagged invisible and skipped by the losses.
inline std::array<TipProjection, 2> tip_points(const KinematicChain& chain, const PoseSet& q,
                                               const Camera& camera) {
  std::array<TipProjection, 2> out;
  const int parts[2] = {kGripperRight, kTooltipLeft};
  for (int i = 0; i < 2; ++i) {
    TipProjection& tp = out[i];
    tp.part_id = parts[i];
    const RigidTransform T = pose_part_to_camera(chain, q, parts[i]);
    tp.point_cam = T.apply(chain.tip_local(parts[i]));
    tp.visible = tp.point_cam.z() > camera.near;
    if (tp.visible) tp.pixel = camera.project(tp.point_cam);
  }
  return out;
}

}  // namespace artsplat
