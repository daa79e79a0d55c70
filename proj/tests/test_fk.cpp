#include <catch2/catch_amalgamated.hpp>

#include "artsplat/core/chain.hpp"
#include "artsplat/core/rng.hpp"
#include "artsplat/eval/synthetic.hpp"
#include "artsplat/kin/fk.hpp"

using namespace artsplat;

namespace {

KinematicChain identity_z_chain() {
  KinematicChain chain;
  chain.part_names = {"shaft", "wrist", "gripper_right", "tooltip_left"};
  for (int j = 0; j < kNumJoints; ++j) {
    chain.joints[j].frame = RigidTransform::identity();
    chain.joints[j].axis = Vec3d(0, 0, 1);
    chain.joints[j].limit_min = -kPi;
    chain.joints[j].limit_max = kPi;
  }
  chain.tip_right = Vec3d(0, 0, 0.02);
  chain.tip_left = Vec3d(0, 0, 0.02);
  chain.validate();
  return chain;
}

PoseSet random_pose(const KinematicChain& chain, Rng& rng) {
  PoseSet q;
  for (int j = 0; j < kNumJoints; ++j)
    q.theta[j] = rng.uniform(chain.joints[j].limit_min * 0.8,
                             chain.joints[j].limit_max * 0.8);
  for (int k = 0; k < 3; ++k) q.xi[k] = 0.05 * rng.normal();
  q.xi.tail<3>() = rng.unit_vector() * rng.uniform(0, 1.5);
  q.xi[2] += 0.2;
  return q;
}

}  // namespace

TEST_CASE("pure z rotation moves +x to +y between wrist and shaft frames") {
  const KinematicChain chain = identity_z_chain();
  const auto fk = forward_kinematics(chain, {kPi / 2, 0, 0});
  const Vec3d in_shaft = fk[kWrist].apply(Vec3d(1, 0, 0));
  REQUIRE((in_shaft - Vec3d(0, 1, 0)).norm() < 1e-15);
}

TEST_CASE("forward kinematics equals the explicit composition oracle") {
  const SyntheticSpec spec;
  const KinematicChain chain = make_synthetic_chain(spec);
  Rng rng(11);
  auto rot_about = [](const Vec3d& axis, double angle) {
    RigidTransform t;
    t.rotation = so3_exp(axis * angle);
    return t;
  };
  for (int i = 0; i < 200; ++i) {
    std::array<double, 3> theta;
    for (int j = 0; j < 3; ++j)
      theta[j] = rng.uniform(chain.joints[j].limit_min, chain.joints[j].limit_max);
    const auto fk = forward_kinematics(chain, theta);
    const RigidTransform w =
        chain.joints[0].frame.compose(rot_about(chain.joints[0].axis, theta[0]));
    const RigidTransform g =
        w.compose(chain.joints[1].frame).compose(rot_about(chain.joints[1].axis, theta[1]));
    const RigidTransform l =
        g.compose(chain.joints[2].frame).compose(rot_about(chain.joints[2].axis, theta[2]));
    REQUIRE((fk[kShaft].rotation - Mat3d::Identity()).norm() == 0.0);
    REQUIRE(fk[kShaft].translation.norm() == 0.0);
    REQUIRE((fk[kWrist].rotation - w.rotation).norm() < 1e-9);
    REQUIRE((fk[kWrist].translation - w.translation).norm() < 1e-9);
    REQUIRE((fk[kGripperRight].rotation - g.rotation).norm() < 1e-9);
    REQUIRE((fk[kGripperRight].translation - g.translation).norm() < 1e-9);
    REQUIRE((fk[kTooltipLeft].rotation - l.rotation).norm() < 1e-9);
    REQUIRE((fk[kTooltipLeft].translation - l.translation).norm() < 1e-9);
  }
}

TEST_CASE("pose derivatives carry exact structural zeros") {
  const SyntheticSpec spec;
  const KinematicChain chain = make_synthetic_chain(spec);
  Rng rng(12);
  const PoseSet q = random_pose(chain, rng);
  const auto derivs = pose_part_derivs(chain, q);
  // Part p depends on theta_j only for j < p; every part depends on xi.
  for (int p = 0; p < kNumParts; ++p) {
    for (int j = 0; j < 3; ++j) {
      const bool expected = j < p;
      REQUIRE(derivs[p].active[j] == expected);
      if (!expected) {
        REQUIRE(derivs[p].d_rotation[j].norm() == 0.0);
        REQUIRE(derivs[p].d_translation[j].norm() == 0.0);
      }
    }
    for (int k = 3; k < kPoseParams; ++k) REQUIRE(derivs[p].active[k]);
  }
}

TEST_CASE("point_pose_jacobian matches central finite differences") {
  const SyntheticSpec spec;
  const KinematicChain chain = make_synthetic_chain(spec);
  Rng rng(13);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const PoseSet q = random_pose(chain, rng);
    const int part = rng.uniform_int(0, kNumParts - 1);
    const Vec3d local = 0.02 * rng.normal3();
    const PoseJacobian jac = point_pose_jacobian(chain, q, part, local);
    // Theta columns are plain partials; xi columns are left-perturbation
    // derivatives, so the FD step composes exp(h*delta) on the left.
    const auto perturbed = [&](int k, double step) {
      PoseSet qq = q;
      if (k < 3) {
        qq.theta[k] += step;
      } else {
        Vec6d delta = Vec6d::Zero();
        delta[k - 3] = step;
        qq.xi = log_se3(exp_se3(delta).compose(exp_se3(q.xi)));
      }
      return pose_part_to_camera(chain, qq, part).apply(local);
    };
    for (int k = 0; k < kPoseParams; ++k) {
      const Vec3d fd = (perturbed(k, h) - perturbed(k, -h)) / (2 * h);
      REQUIRE((jac.col(k) - fd).norm() < 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("left perturbation makes translation derivatives the identity") {
  const SyntheticSpec spec;
  const KinematicChain chain = make_synthetic_chain(spec);
  Rng rng(14);
  const PoseSet q = random_pose(chain, rng);
  const auto derivs = pose_part_derivs(chain, q);
  for (int p = 0; p < kNumParts; ++p)
    for (int k = 0; k < 3; ++k) {
      Vec3d e = Vec3d::Zero();
      e[k] = 1;
      // d(translation)/d(xi_trans_k) is exactly e_k under left perturbation.
      REQUIRE((derivs[p].d_translation[3 + k] - e).norm() == 0.0);
      REQUIRE(derivs[p].d_rotation[3 + k].norm() == 0.0);
    }
}

TEST_CASE("pose_gaussians conjugates local covariance into the camera frame") {
  const SyntheticSpec spec;
  const KinematicChain chain = make_synthetic_chain(spec);
  Rng rng(15);
  std::vector<std::pair<int, std::vector<GaussianPrimitive>>> parts;
  for (int p = 0; p < kNumParts; ++p) {
    std::vector<GaussianPrimitive> prims(2);
    for (auto& g : prims) {
      g.part_id = p;
      for (int k = 0; k < 3; ++k) g.mean[k] = float(0.01 * rng.normal());
      Vec4d quat;
      for (int k = 0; k < 4; ++k) quat[k] = rng.normal();
      quat.normalize();
      for (int k = 0; k < 4; ++k) g.rotation[k] = float(quat[k]);
      for (int k = 0; k < 3; ++k) g.log_scale[k] = float(rng.uniform(-7, -5));
    }
    parts.emplace_back(p, prims);
  }
  const ArticulatedGaussianModel model = new_model(parts, chain);
  const PoseSet q = random_pose(chain, rng);
  const auto posed = pose_gaussians(model, q);
  REQUIRE(int(posed.size()) == model.size());
  const auto fk = forward_kinematics(chain, q.theta);
  const RigidTransform cam = q.cam_T_shaft();
  for (int i = 0; i < model.size(); ++i) {
    const GaussianPrimitive& g = model.primitives()[i];
    const RigidTransform T = cam.compose(fk[g.part_id]);
    REQUIRE((posed[i].mean_cam - T.apply(g.mean.cast<double>())).norm() < 1e-12);
    // Camera-frame covariance two ways: quaternion path vs conjugation.
    const Mat3d r_cam = quat_to_mat(posed[i].rotation_cam);
    const Vec3d s2 = g.scale().array().square();
    const Mat3d cov_quat = r_cam * s2.asDiagonal() * r_cam.transpose();
    const Mat3d cov_conj = T.rotation * g.covariance() * T.rotation.transpose();
    REQUIRE((cov_quat - cov_conj).norm() < 1e-12);
    REQUIRE(posed[i].rotation_cam[0] >= 0.0);
  }
}

TEST_CASE("tip on the optical axis projects to the principal point") {
  KinematicChain chain = identity_z_chain();
  Camera cam;
  cam.fx = cam.fy = 500;
  cam.cx = 320;
  cam.cy = 240;
  cam.width = 640;
  cam.height = 480;
  PoseSet q;
  q.xi[2] = 0.3;  // straight ahead
  const auto tips = tip_points(chain, q, cam);
  for (const TipProjection& tp : tips) {
    REQUIRE(tp.visible);
    REQUIRE((tp.pixel - Vec2d(320, 240)).norm() < 1e-12);
  }
}

TEST_CASE("tips behind the near plane are flagged invisible") {
  KinematicChain chain = identity_z_chain();
  Camera cam;
  cam.fx = cam.fy = 500;
  cam.cx = 320;
  cam.cy = 240;
  cam.width = 640;
  cam.height = 480;
  PoseSet q;
  q.xi[2] = -0.5;
  const auto tips = tip_points(chain, q, cam);
  for (const TipProjection& tp : tips) REQUIRE_FALSE(tp.visible);
}

TEST_CASE("joint limit helpers clamp and test membership") {
  const SyntheticSpec spec;
  const KinematicChain chain = make_synthetic_chain(spec);
  const auto mid = chain.mid_range_theta();
  REQUIRE(chain.within_limits(mid));
  std::array<double, 3> out = {chain.joints[0].limit_max + 1.0, 0, 0};
  REQUIRE_FALSE(chain.within_limits(out));
  const auto clamped = chain.clamp_theta(out);
  REQUIRE(clamped[0] == chain.joints[0].limit_max);
  REQUIRE(chain.within_limits(clamped));
}
