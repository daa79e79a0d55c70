#pragma once

#include <cmath>
#include <string>

#include "artsplat/core/model.hpp"
#include "artsplat/core/types.hpp"
#include "artsplat/optim/adam.hpp"
#include "artsplat/sapet/pose_loss.hpp"

namespace artsplat {

struct PoseEstimate {
  PoseSet q;
  double final_loss = 0;
  double sil_loss = 0;
  double tip_loss = 0;
  double reg_loss = 0;
  int iterations_used = 0;
  bool converged = false;
  bool failed = false;
  std::string note;
};

// First-order descent on pose_loss from q_init. Returns the best pose seen,
// which is q_init itself if no step improved on it. Divergence (loss above
// 10x the initial value) and non-finite losses abort with failed=true.
inline PoseEstimate estimate_pose_frame(const ArticulatedGaussianModel& model,
                                        const Frame& frame, const Camera& cam,
                                        const PoseSet& q_init,
                                        const OptimConfig& cfg,
                                        const RasterParams* raster_override = nullptr) {
  PoseEstimate est;
  est.q = q_init;

  PoseLossResult ev = pose_loss(model, q_init, frame, cam, cfg, raster_override);
  est.final_loss = ev.total;
  est.sil_loss = ev.sil;
  est.tip_loss = ev.tip;
  est.reg_loss = ev.reg;
  if (!std::isfinite(ev.total)) {
    est.failed = true;
    est.note = "non-finite loss at initial pose";
    return est;
  }
  if (cfg.pose_iters <= 0) return est;

  const double initial = ev.total;
  PoseOptimizer opt(cfg);
  EarlyStop stop(cfg.early_stop_window, cfg.early_stop_rel_threshold);
  stop.update(initial);

  PoseSet q = q_init;
  PoseSet best_q = q_init;
  double best = initial;
  double best_sil = ev.sil, best_tip = ev.tip, best_reg = ev.reg;
  int it = 0;
  for (; it < cfg.pose_iters; ++it) {
    q = opt.step(model.chain(), q, ev.d_pose,
                 cosine_decay(it, cfg.pose_iters));
    ev = pose_loss(model, q, frame, cam, cfg, raster_override);
    if (!std::isfinite(ev.total)) {
      est.failed = true;
      est.note = "non-finite loss during descent";
      ++it;
      break;
    }
    if (ev.total < best) {
      best = ev.total;
      best_q = q;
      best_sil = ev.sil;
      best_tip = ev.tip;
      best_reg = ev.reg;
    }
    if (ev.total > 10.0 * std::max(initial, 1e-12)) {
      est.failed = true;
      est.note = "diverged";
      ++it;
      break;
    }
    if (stop.update(ev.total)) {
      est.converged = true;
      ++it;
      break;
    }
  }
  est.q = best_q;
  est.final_loss = best;
  est.sil_loss = best_sil;
  est.tip_loss = best_tip;
  est.reg_loss = best_reg;
  est.iterations_used = it;
  return est;
}

}  // namespace artsplat
