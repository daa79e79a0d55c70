#pragma once

#include <cmath>

#include "artsplat/core/model.hpp"
#include "artsplat/core/types.hpp"
#include "artsplat/render/backward.hpp"
#include "artsplat/render/rasterize.hpp"

namespace artsplat {

struct TextureLossResult {
  double total = 0;
  double pho = 0;   // unweighted photometric term
  double mask = 0;  // unweighted mask term
  GradientBundle grads;
};

// L_tex = L_pho + lambda_mask * L_mask, both sum-form l1. The render uses a
// black background, so the composite over the observed image is
// I_hat = C_hat + (1 - A_hat) * I_obs and the photometric residual
// C_hat - A_hat * I_obs vanishes exactly wherever no splat touches a
// background pixel; no explicit mask-union bookkeeping is needed.
inline TextureLossResult texture_loss(const ArticulatedGaussianModel& model,
                                      const PoseSet& q, const Frame& frame,
                                      const Camera& cam, const OptimConfig& cfg,
                                      const RasterParams* raster_override = nullptr) {
  if (frame.rgb.size() == 0 || frame.instrument_mask.size() == 0)
    throw ValidationError("texture_loss: frame needs rgb and instrument_mask");
  const int h = frame.height(), w = frame.width();
  if (h != cam.height || w != cam.width)
    throw ValidationError("texture_loss: frame size does not match camera");

  RasterParams rp = raster_override ? *raster_override : RasterParams::from(cfg);
  rp.background = Vec3d::Zero();
  rp.with_semantics = false;
  rp.with_depth = false;
  rp.with_tape = true;
  const RenderOutput out = rasterize(model, q, cam, rp);

  TextureLossResult res;
  GridF d_color(h, w, 3);
  GridF d_alpha(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a_hat = out.alpha.at(y, x, 0);
      double da = 0;
      for (int c = 0; c < 3; ++c) {
        const double iobs = frame.rgb.at(y, x, c);
        const double r = out.color.at(y, x, c) - a_hat * iobs;
        res.pho += std::abs(r);
        const double s = r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0);
        d_color.at(y, x, c) = s;
        da -= s * iobs;
      }
      const double m = frame.instrument_mask.at(y, x, 0) != 0 ? 1.0 : 0.0;
      const double rm = a_hat - m;
      res.mask += std::abs(rm);
      da += cfg.lambda_mask * (rm > 0 ? 1.0 : (rm < 0 ? -1.0 : 0.0));
      d_alpha.at(y, x, 0) = da;
    }
  }
  res.total = res.pho + cfg.lambda_mask * res.mask;

  PixelGrads pg;
  pg.color = &d_color;
  pg.alpha = &d_alpha;
  res.grads = rasterize_backward(out, pg, model, q, cam);
  return res;
}

// The I_hat image of the texture loss: the model rendered over black and
// composited onto the observed frame by its own alpha.
inline GridF render_composite(const ArticulatedGaussianModel& model,
                              const PoseSet& q, const Frame& frame,
                              const Camera& cam,
                              const RasterParams* raster_override = nullptr) {
  RasterParams rp = raster_override ? *raster_override : RasterParams{};
  rp.background = Vec3d::Zero();
  rp.with_semantics = false;
  rp.with_depth = false;
  rp.with_tape = false;
  const RenderOutput out = rasterize(model, q, cam, rp);
  GridF img(cam.height, cam.width, 3);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      const double a = out.alpha.at(y, x, 0);
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) =
            out.color.at(y, x, c) + (1.0 - a) * frame.rgb.at(y, x, c);
    }
  return img;
}

}  // namespace artsplat
