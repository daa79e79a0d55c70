#pragma once

#include <artsplat/core/model.hpp>
#include <artsplat/core/rng.hpp>
#include <artsplat/kin/fk.hpp>
#include <artsplat/render/rasterize.hpp>

#include <vector>

namespace artsplat {

// Pose region the dataset generator draws from: joints uniform inside (a
// sub-box of) the chain limits, the shaft frame at a uniformly jittered
// standoff in front of the camera with a bounded random rotation.
struct PoseRegion {
  double standoff = 0.22;          // meters along +z
  double standoff_jitter = 0.05;
  double lateral_jitter = 0.03;    // x/y translation, meters
  double rot_angle_max = 0.6;      // radians, about a random axis
  double theta_margin = 0.0;       // shrink joint ranges by this much

  PoseSet sample(const KinematicChain& chain, Rng& rng) const {
    PoseSet q;
    for (int j = 0; j < kNumJoints; ++j) {
      const auto& js = chain.joints[j];
      const double lo = js.limit_min + theta_margin;
      const double hi = js.limit_max - theta_margin;
      q.theta[j] = rng.uniform(std::min(lo, hi), std::max(lo, hi));
    }
    RigidTransform t;
    t.rotation = so3_exp(rng.unit_vector() * rng.uniform(0.0, rot_angle_max));
    t.translation = Vec3d(rng.uniform(-lateral_jitter, lateral_jitter),
                          rng.uniform(-lateral_jitter, lateral_jitter),
                          standoff + rng.uniform(-standoff_jitter, standoff_jitter));
    q.xi = log_se3(t);
    return q;
  }
};

struct TipSample {
  GridU8 semantics;          // label map, 0 = background
  std::vector<Vec2d> tips;   // visible tips only, unordered
  PoseSet pose;
};

inline bool tip_in_frame(const TipProjection& tp, const Camera& cam) {
  return tp.visible && tp.pixel.x() >= 0 && tp.pixel.x() < cam.width && tp.pixel.y() >= 0 &&
         tp.pixel.y() < cam.height;
}

// Semantics-tip pairs over random poses; samples where both tips fall
// outside the view are discarded. No RGB is rendered on purpose: a detector
// trained on these sees shape only.
inline std::vector<TipSample> generate_tip_dataset(const ArticulatedGaussianModel& model,
                                                   const Camera& cam, int n,
                                                   const PoseRegion& region, uint64_t seed) {
  if (n < 1) throw ValidationError("generate_tip_dataset: n must be >= 1");
  RasterParams params;
  params.with_tape = false;
  params.with_depth = false;
  std::vector<TipSample> samples;
  samples.reserve(n);
  Rng rng(seed);
  const long budget = 50L * n + 1000;
  for (long attempt = 0; attempt < budget && int(samples.size()) < n; ++attempt) {
    Rng stream = rng.fork(uint64_t(attempt));
    const PoseSet q = region.sample(model.chain(), stream);
    const auto tips = tip_points(model.chain(), q, cam);
    TipSample s;
    for (const TipProjection& tp : tips)
      if (tip_in_frame(tp, cam)) s.tips.push_back(tp.pixel);
    if (s.tips.empty()) continue;
    RenderOutput out = rasterize(model, q, cam, params);
    s.semantics = out.semantics_argmax();
    s.pose = q;
    samples.push_back(std::move(s));
  }
  if (int(samples.size()) < n)
    throw ValidationError("generate_tip_dataset: pose region yielded only " +
                          std::to_string(samples.size()) + " visible samples of " +
                          std::to_string(n));
  return samples;
}

}  // namespace artsplat
