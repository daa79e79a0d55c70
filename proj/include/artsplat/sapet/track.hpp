#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "artsplat/core/model.hpp"
#include "artsplat/core/rng.hpp"
#include "artsplat/core/types.hpp"
#include "artsplat/kin/se3.hpp"
#include "artsplat/render/rasterize.hpp"
#include "artsplat/sapet/estimate.hpp"
#include "artsplat/sapet/pnp.hpp"

namespace artsplat {

// Thrown when tracking cannot recover; distinct from input validation errors.
class TrackingLostError : public std::runtime_error {
 public:
  explicit TrackingLostError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrackedFrame {
  int frame_index = 0;
  PoseEstimate estimate;
  bool reseeded = false;  // xi re-initialized from correspondences
};

struct Trajectory {
  std::vector<TrackedFrame> frames;
};

namespace detail {

// Re-derives the 3D side of injected correspondences from the model itself:
// each shaft-frame point is projected into the previous frame, its rendered
// depth is read back, and the lifted camera point is mapped into the shaft
// frame of the previous pose. Pairing those with the current frame's pixels
// gives a PnP problem whose 3D points live on the rendered surface.
inline std::vector<std::pair<Vec2d, Vec3d>> lift_correspondences(
    const ArticulatedGaussianModel& model, const PoseSet& q_prev,
    const Camera& cam, const std::vector<std::pair<Vec2d, Vec3d>>& corr,
    const RasterParams& base_params) {
  RasterParams rp = base_params;
  rp.with_semantics = false;
  rp.with_depth = true;
  rp.with_tape = false;
  const RenderOutput out = rasterize(model, q_prev, cam, rp);
  const RigidTransform cam_T_shaft = q_prev.cam_T_shaft();
  const RigidTransform shaft_T_cam = cam_T_shaft.inverse();

  std::vector<std::pair<Vec2d, Vec3d>> lifted;
  lifted.reserve(corr.size());
  for (const auto& [px, X] : corr) {
    const Vec3d p_cam = cam_T_shaft.apply(X);
    if (p_cam.z() <= cam.near) continue;
    const Vec2d uv = cam.project(p_cam);
    const int u = int(std::floor(uv.x()));
    const int v = int(std::floor(uv.y()));
    if (u < 0 || u >= cam.width || v < 0 || v >= cam.height) continue;
    const double z = out.depth.at(v, u, 0);
    if (z <= 0) continue;  // no coverage at this pixel
    const Vec3d lifted_cam = cam.unproject(Vec2d(u + 0.5, v + 0.5), z);
    lifted.emplace_back(px, shaft_T_cam.apply(lifted_cam));
  }
  return lifted;
}

inline PoseSet perturb_pose(const KinematicChain& chain, const PoseSet& q,
                            Rng& rng) {
  PoseSet p = q;
  for (int j = 0; j < kNumJoints; ++j)
    p.theta[j] += rng.uniform(-0.08, 0.08);
  p.theta = chain.clamp_theta(p.theta);
  Vec6d delta;
  delta.head<3>() = Vec3d(rng.uniform(-0.004, 0.004), rng.uniform(-0.004, 0.004),
                          rng.uniform(-0.004, 0.004));
  delta.tail<3>() = Vec3d(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                          rng.uniform(-0.05, 0.05));
  p.xi = log_se3(exp_se3(delta).compose(exp_se3(q.xi)));
  return p;
}

inline bool frame_has_foreground(const Frame& frame) {
  for (int y = 0; y < frame.instrument_mask.height(); ++y)
    for (int x = 0; x < frame.instrument_mask.width(); ++x)
      if (frame.instrument_mask.at(y, x, 0) != 0) return true;
  return false;
}

}  // namespace detail

// Frame-to-frame tracking. Frame 0 seeds joint angles mid-range and the rigid
// pose from PnP on its (required) correspondences; later frames start from the
// previous estimate, re-seeding xi whenever injected correspondences can be
// lifted through the previous frame's rendered depth. A failed frame keeps the
// last good pose and is flagged; three consecutive failures abort.
inline Trajectory track_sequence(const ArticulatedGaussianModel& model,
                                 const std::vector<Frame>& frames,
                                 const Camera& cam, const OptimConfig& cfg,
                                 uint64_t seed = 7,
                                 const RasterParams* raster_override = nullptr) {
  if (frames.empty()) throw ValidationError("track_sequence: no frames");
  if (!frames[0].correspondences || frames[0].correspondences->size() < 6)
    throw ValidationError(
        "track_sequence: frame 0 needs at least 6 correspondences to "
        "initialize the rigid pose");

  const RasterParams base_params =
      raster_override ? *raster_override : RasterParams::from(cfg);
  Rng rng(seed);
  Trajectory traj;
  traj.frames.reserve(frames.size());

  PoseSet q_prev;
  int consecutive_failures = 0;
  for (int i = 0; i < int(frames.size()); ++i) {
    const Frame& frame = frames[i];
    TrackedFrame tf;
    tf.frame_index = i;

    PoseSet q_init;
    if (i == 0) {
      q_init.theta = model.chain().mid_range_theta();
      const PnpResult pnp = pnp_solve(*frame.correspondences, cam);
      q_init.xi = log_se3(pnp.T);
      tf.reseeded = true;
    } else {
      q_init = q_prev;
      if (frame.correspondences && frame.correspondences->size() >= 6) {
        const auto lifted = detail::lift_correspondences(
            model, q_prev, cam, *frame.correspondences, base_params);
        if (lifted.size() >= 6) {
          const PnpResult pnp = pnp_solve(lifted, cam);
          if (!pnp.low_confidence) {
            q_init.xi = log_se3(pnp.T);
            tf.reseeded = true;
          }
        }
      }
    }

    if (!detail::frame_has_foreground(frame)) {
      // Nothing to fit against; carry the seed pose and flag the frame.
      tf.estimate.q = q_init;
      tf.estimate.failed = true;
      tf.estimate.note = "no foreground pixels";
      if (++consecutive_failures >= 3)
        throw TrackingLostError("track_sequence: lost track at frame " +
                                std::to_string(i));
      q_prev = q_init;
      traj.frames.push_back(std::move(tf));
      continue;
    }

    PoseEstimate est =
        estimate_pose_frame(model, frame, cam, q_init, cfg, &base_params);
    if (est.failed) {
      // Multi-start fallback: retry from a few perturbed seeds.
      for (int attempt = 0; attempt < 4 && est.failed; ++attempt) {
        Rng sub = rng.fork(uint64_t(i) * 16 + attempt);
        const PoseSet q_try = detail::perturb_pose(model.chain(), q_init, sub);
        PoseEstimate retry =
            estimate_pose_frame(model, frame, cam, q_try, cfg, &base_params);
        if (!retry.failed || retry.final_loss < est.final_loss) est = retry;
      }
    }
    tf.estimate = est;

    if (est.failed) {
      if (++consecutive_failures >= 3)
        throw TrackingLostError("track_sequence: lost track at frame " +
                                std::to_string(i));
      // Continue from the last good pose rather than the failed fit.
      if (i > 0) tf.estimate.q = q_prev;
    } else {
      consecutive_failures = 0;
    }
    q_prev = tf.estimate.q;
    traj.frames.push_back(std::move(tf));
  }
  return traj;
}

}  // namespace artsplat
