#pragma once

#include <artsplat/core/model.hpp>
#include <artsplat/core/types.hpp>
#include <artsplat/kin/fk.hpp>
#include <artsplat/render/backward.hpp>
#include <artsplat/render/rasterize.hpp>
#include <artsplat/tip/chamfer.hpp>

#include <vector>

namespace artsplat {

struct PoseLossResult {
  double total = 0;
  double sil = 0;
  double tip = 0;     // unweighted
  double reg = 0;     // unweighted joint-limit penalty (not part of the paper losses)
  bool tip_evaluated = false;
  Vec9d d_pose = Vec9d::Zero();
};

namespace detail {

// l1 between soft rendered part channels and the one-hot target (or a soft
// target when the frame provides one); fills the per-pixel gradient grid.
inline double semantics_l1(const GridF& rendered, const Frame& frame, GridF& d_sem) {
  const int H = rendered.height(), W = rendered.width(), P = rendered.channels();
  d_sem = GridF(H, W, P);
  double loss = 0;
  const GridF* soft = frame.soft_semantics ? &*frame.soft_semantics : nullptr;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const int label = soft ? -1 : frame.part_semantics.at(y, x);
      for (int p = 0; p < P; ++p) {
        const double target = soft ? soft->at(y, x, p) : (label == p + 1 ? 1.0 : 0.0);
        const double r = rendered.at(y, x, p) - target;
        loss += std::abs(r);
        d_sem.at(y, x, p) = r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0);
      }
    }
  return loss;
}

}  // namespace detail

// Silhouette alignment plus the truncated tip term (and an optional
// quadratic joint-limit penalty, which has no counterpart in the losses this
// follows; it only activates outside the limits).
inline PoseLossResult pose_loss(const ArticulatedGaussianModel& model, const PoseSet& q,
                                const Frame& frame, const Camera& cam, const OptimConfig& cfg,
                                const RasterParams* raster_override = nullptr) {
  if (frame.part_semantics.empty() && !frame.soft_semantics)
    throw ValidationError("pose_loss: frame has no semantics");
  RasterParams params = raster_override ? *raster_override : RasterParams::from(cfg);
  params.with_semantics = true;
  params.with_depth = false;
  params.with_tape = true;

  RenderOutput out = rasterize(model, q, cam, params);
  PoseLossResult res;
  GridF d_sem;
  res.sil = detail::semantics_l1(out.semantics, frame, d_sem);
  PixelGrads pg;
  pg.semantics = &d_sem;
  GradientBundle bundle = rasterize_backward(out, pg, model, q, cam);
  res.d_pose = bundle.d_pose;

  if (cfg.lambda_tip > 0 && frame.tips_2d && !frame.tips_2d->empty()) {
    const auto tips = tip_points(model.chain(), q, cam);
    std::vector<Vec2d> rendered;
    std::vector<const TipProjection*> sources;
    for (const auto& tp : tips)
      if (tp.visible) {
        rendered.push_back(tp.pixel);
        sources.push_back(&tp);
      }
    const TipLossResult tl = tip_loss(rendered, *frame.tips_2d, cfg.tip_tolerance_r);
    res.tip_evaluated = tl.evaluated;
    if (tl.evaluated) {
      res.tip = tl.loss;
      for (size_t i = 0; i < rendered.size(); ++i) {
        const TipProjection& tp = *sources[i];
        const Mat23d j_px = projection_jacobian(cam, tp.point_cam);
        const PoseJacobian j_pose =
            point_pose_jacobian(model.chain(), q, tp.part_id, model.chain().tip_local(tp.part_id));
        res.d_pose += cfg.lambda_tip * (j_px * j_pose).transpose() * tl.d_rendered[i];
      }
    }
  }

  if (cfg.joint_limit_weight > 0) {
    for (int j = 0; j < kNumJoints; ++j) {
      const auto& js = model.chain().joints[j];
      const double over = std::max(0.0, q.theta[j] - js.limit_max);
      const double under = std::max(0.0, js.limit_min - q.theta[j]);
      res.reg += over * over + under * under;
      res.d_pose[j] += cfg.joint_limit_weight * 2.0 * (over - under);
    }
  }

  res.total = res.sil + cfg.lambda_tip * res.tip + cfg.joint_limit_weight * res.reg;
  return res;
}

}  // namespace artsplat
