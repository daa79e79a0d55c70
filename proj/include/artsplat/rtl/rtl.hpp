#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "artsplat/core/model.hpp"
#include "artsplat/core/rng.hpp"
#include "artsplat/core/types.hpp"
#include "artsplat/optim/adam.hpp"
#include "artsplat/rtl/texture_loss.hpp"

namespace artsplat {

// Every 8th frame is held out (7:1 train/test).
inline bool is_heldout_frame(int index) { return index % 8 == 7; }

inline std::vector<int> train_frame_indices(int n_frames) {
  std::vector<int> idx;
  for (int i = 0; i < n_frames; ++i)
    if (!is_heldout_frame(i)) idx.push_back(i);
  return idx;
}

struct RefinementTrace {
  int frame_index = 0;
  std::vector<PoseSet> poses;   // q_0 .. q_K, q_0 = incoming estimate
  std::vector<double> losses;   // L_tex at each pose
  bool truncated = false;       // non-finite gradient cut the trace short
};

struct MetricPoint {
  int iteration = 0;
  double mean_loss = 0;  // mean L_tex since the previous point
};

struct TrainState {
  ArticulatedGaussianModel model;
  std::vector<PoseSet> poses;  // 1:1 with frames, refined in place
  std::vector<int> train_indices;
  int iteration = 0;
  Rng rng{0};
  std::vector<MetricPoint> history;
  bool aborted = false;
  std::string note;
};

inline TrainState make_train_state(ArticulatedGaussianModel model,
                                   std::vector<PoseSet> poses, uint64_t seed) {
  TrainState st;
  st.model = std::move(model);
  st.train_indices = train_frame_indices(int(poses.size()));
  st.poses = std::move(poses);
  st.rng = Rng(seed);
  if (st.train_indices.empty())
    throw ValidationError("make_train_state: no training frames");
  return st;
}

// Appearance warm-up: first-order updates of all Gaussian attributes on the
// texture loss of a uniformly sampled training frame per step. Poses are
// never touched.
inline void warmup(TrainState& st, const std::vector<Frame>& frames,
                   const Camera& cam, const OptimConfig& cfg,
                   const RasterParams* raster_override = nullptr) {
  if (st.poses.size() != frames.size())
    throw ValidationError("warmup: poses and frames differ in count");
  GaussianOptimizer opt(st.model.size(), cfg);
  double loss_acc = 0;
  int loss_n = 0;
  for (int it = 0; it < cfg.warmup_iters; ++it) {
    const int fi = st.train_indices[st.rng.uniform_int(
        0, int(st.train_indices.size()) - 1)];
    const TextureLossResult res = texture_loss(st.model, st.poses[fi],
                                               frames[fi], cam, cfg,
                                               raster_override);
    if (!std::isfinite(res.total) || !res.grads.all_finite()) {
      st.aborted = true;
      st.note = "warmup: non-finite loss at iteration " + std::to_string(it);
      return;
    }
    opt.step(st.model.mutable_primitives(), res.grads);
    loss_acc += res.total;
    if (++loss_n >= 100) {
      st.history.push_back({st.iteration + it + 1, loss_acc / loss_n});
      loss_acc = 0;
      loss_n = 0;
    }
  }
  if (loss_n > 0)
    st.history.push_back({st.iteration + cfg.warmup_iters, loss_acc / loss_n});
  st.iteration += cfg.warmup_iters;
}

// K pose-only descent steps on L_tex with frozen Gaussians, recording every
// pose and loss. plain_descent swaps the adaptive update for a raw gradient
// step at the same learning rates.
inline RefinementTrace refine_pose(const ArticulatedGaussianModel& model,
                                   const Frame& frame, const Camera& cam,
                                   const PoseSet& q0, int frame_index,
                                   const OptimConfig& cfg,
                                   bool plain_descent = false,
                                   const RasterParams* raster_override = nullptr) {
  if (cfg.refine_steps < 1)
    throw ValidationError("refine_pose: refine_steps must be >= 1");
  RefinementTrace trace;
  trace.frame_index = frame_index;
  trace.poses.reserve(cfg.refine_steps + 1);
  trace.losses.reserve(cfg.refine_steps + 1);

  PoseOptimizer opt(cfg);
  PoseSet q = q0;
  for (int k = 0; k <= cfg.refine_steps; ++k) {
    const TextureLossResult res =
        texture_loss(model, q, frame, cam, cfg, raster_override);
    if (!std::isfinite(res.total) || !res.grads.d_pose.allFinite()) {
      trace.truncated = true;
      break;
    }
    trace.poses.push_back(q);
    trace.losses.push_back(res.total);
    if (k == cfg.refine_steps) break;
    if (plain_descent) {
      Vec9d upd;
      upd << cfg.eta_theta * res.grads.d_pose.head<3>(),
          cfg.eta_xi_trans * res.grads.d_pose.segment<3>(3),
          cfg.eta_xi_rot * res.grads.d_pose.tail<3>();
      for (int j = 0; j < kNumJoints; ++j) q.theta[j] -= upd[j];
      q.theta = model.chain().clamp_theta(q.theta);
      Vec6d delta = -upd.tail<6>();
      q.xi = log_se3(exp_se3(delta).compose(exp_se3(q.xi)));
    } else {
      q = opt.step(model.chain(), q, res.grads.d_pose, 1.0);
    }
  }
  if (trace.poses.empty())
    throw ValidationError("refine_pose: non-finite loss at the initial pose");
  return trace;
}

namespace detail {

// Balanced pairwise reduction over the trace; the gradient at each pose is
// computed lazily inside the recursion so only log2(n) partial sums are live.
// Splitting at the midpoint makes the sum of two half-traces bit-identical to
// the full-trace sum whenever the length is a power of two.
inline GradientBundle robust_sum(const ArticulatedGaussianModel& model,
                                 const Frame& frame, const Camera& cam,
                                 const std::vector<PoseSet>& poses, int lo,
                                 int hi, const OptimConfig& cfg,
                                 const RasterParams* raster_override) {
  if (hi - lo == 1)
    return texture_loss(model, poses[lo], frame, cam, cfg, raster_override)
        .grads;
  const int mid = lo + (hi - lo) / 2;
  GradientBundle left =
      robust_sum(model, frame, cam, poses, lo, mid, cfg, raster_override);
  const GradientBundle right =
      robust_sum(model, frame, cam, poses, mid, hi, cfg, raster_override);
  left.add_scaled(right, 1.0);
  return left;
}

}  // namespace detail

// Trajectory-aggregated Gaussian-attribute gradient: the unnormalized sum of
// texture-loss gradients over every pose in the trace (stride > 1 keeps every
// stride-th pose as a compute-saving approximation). Pose components are
// zeroed; the caller applies this to Gaussian attributes only.
inline GradientBundle robust_gradient(const ArticulatedGaussianModel& model,
                                      const Frame& frame, const Camera& cam,
                                      const RefinementTrace& trace,
                                      const OptimConfig& cfg, int stride = 1,
                                      const RasterParams* raster_override = nullptr) {
  if (trace.poses.empty())
    throw ValidationError("robust_gradient: empty refinement trace");
  if (stride < 1) throw ValidationError("robust_gradient: stride must be >= 1");
  std::vector<PoseSet> poses;
  for (size_t k = 0; k < trace.poses.size(); k += stride)
    poses.push_back(trace.poses[k]);
  GradientBundle sum = detail::robust_sum(model, frame, cam, poses, 0,
                                          int(poses.size()), cfg,
                                          raster_override);
  sum.d_pose.setZero();
  return sum;
}

struct RtlReport {
  std::vector<MetricPoint> history;
  int iterations_run = 0;
  bool aborted = false;
  std::string note;
};

// Alternating schedule: per iteration, sample a training frame, refine its
// pose for K steps (persisting q_K so corrections compound across epochs),
// then apply one Gaussian update with the trajectory-aggregated gradient at
// learning rates scaled by 1/(K+1).
inline RtlReport rtl_train(TrainState& st, const std::vector<Frame>& frames,
                           const Camera& cam, const OptimConfig& cfg,
                           int trace_stride = 1,
                           const RasterParams* raster_override = nullptr) {
  if (st.poses.size() != frames.size())
    throw ValidationError("rtl_train: poses and frames differ in count");
  RtlReport report;
  GaussianOptimizer opt(st.model.size(), cfg);
  const double lr_scale = 1.0 / double(cfg.refine_steps + 1);
  double loss_acc = 0;
  int loss_n = 0;
  for (int it = 0; it < cfg.rtl_iters; ++it) {
    const int fi = st.train_indices[st.rng.uniform_int(
        0, int(st.train_indices.size()) - 1)];
    RefinementTrace trace;
    try {
      trace = refine_pose(st.model, frames[fi], cam, st.poses[fi], fi, cfg,
                          false, raster_override);
    } catch (const ValidationError&) {
      st.aborted = report.aborted = true;
      st.note = report.note =
          "rtl_train: non-finite refinement at iteration " + std::to_string(it);
      break;
    }
    st.poses[fi] = trace.poses.back();
    const GradientBundle g = robust_gradient(st.model, frames[fi], cam, trace,
                                             cfg, trace_stride,
                                             raster_override);
    if (!g.all_finite()) {
      st.aborted = report.aborted = true;
      st.note = report.note =
          "rtl_train: non-finite gradient at iteration " + std::to_string(it);
      break;
    }
    opt.step(st.model.mutable_primitives(), g, lr_scale);
    loss_acc += trace.losses.back();
    ++report.iterations_run;
    if (++loss_n >= 50) {
      report.history.push_back({st.iteration + it + 1, loss_acc / loss_n});
      loss_acc = 0;
      loss_n = 0;
    }
  }
  if (loss_n > 0)
    report.history.push_back(
        {st.iteration + report.iterations_run, loss_acc / loss_n});
  st.iteration += report.iterations_run;
  st.history.insert(st.history.end(), report.history.begin(),
                    report.history.end());
  return report;
}

}  // namespace artsplat
