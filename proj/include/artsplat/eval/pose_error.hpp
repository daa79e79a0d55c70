#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "artsplat/core/chain.hpp"
#include "artsplat/core/types.hpp"
#include "artsplat/kin/fk.hpp"
#include "artsplat/kin/se3.hpp"

namespace artsplat {

struct PoseError {
  double joint_deg = 0;      // mean absolute joint-angle error
  double joint_max_deg = 0;  // worst joint
  double rot_deg = 0;        // geodesic error of the rigid rotation
  double trans_m = 0;        // rigid translation error
  double tip_m = 0;          // mean 3D error of the two tool tips
};

inline PoseError pose_error(const KinematicChain& chain, const PoseSet& est,
                            const PoseSet& gt) {
  PoseError e;
  for (int j = 0; j < kNumJoints; ++j) {
    const double d = rad_to_deg(std::abs(est.theta[j] - gt.theta[j]));
    e.joint_deg += d / kNumJoints;
    e.joint_max_deg = std::max(e.joint_max_deg, d);
  }
  const RigidTransform te = est.cam_T_shaft(), tg = gt.cam_T_shaft();
  e.rot_deg = rad_to_deg(so3_log(te.rotation * tg.rotation.transpose()).norm());
  e.trans_m = (te.translation - tg.translation).norm();
  const auto fe = forward_kinematics(chain, est.theta);
  const auto fg = forward_kinematics(chain, gt.theta);
  for (int part : {kGripperRight, kTooltipLeft}) {
    const Vec3d pe = te.compose(fe[part]).apply(chain.tip_local(part));
    const Vec3d pg = tg.compose(fg[part]).apply(chain.tip_local(part));
    e.tip_m += (pe - pg).norm() / 2.0;
  }
  return e;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace artsplat
