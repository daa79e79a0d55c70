#pragma once

#include <artsplat/core/model.hpp>
#include <artsplat/core/rng.hpp>
#include <artsplat/mesh/raster.hpp>
#include <artsplat/mesh/sample.hpp>
#include <artsplat/optim/adam.hpp>
#include <artsplat/render/backward.hpp>
#include <artsplat/render/rasterize.hpp>

#include <vector>

namespace artsplat {

// Primitives seeded on the sampled surface: isotropic, half-transparent,
// gray. Scale comes from the local sample spacing so the initial cloud
// already covers the surface.
inline std::vector<GaussianPrimitive> init_primitives(const std::vector<Vec3d>& points,
                                                      int part_id) {
  if (points.size() < 2) throw ValidationError("init_primitives: need at least 2 points");
  const auto nn = knn_mean_distance(points, 3);
  std::vector<GaussianPrimitive> prims;
  prims.reserve(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    GaussianPrimitive g;
    g.mean = points[i].cast<float>();
    g.rotation = Vec4f(1, 0, 0, 0);
    const float ls = float(std::log(std::max(1e-9, nn[i])));
    g.log_scale = Vec3f(ls, ls, ls);
    g.opacity_logit = 0.f;  // opacity 0.5
    g.color = Vec3f(0.5f, 0.5f, 0.5f);
    g.part_id = part_id;
    prims.push_back(g);
  }
  return prims;
}

// Sum-form l1 between rendered alpha and a binary silhouette, with its
// pixel gradient.
inline double silhouette_l1(const GridF& alpha, const GridU8& sil, GridF& d_alpha) {
  if (alpha.height() != sil.height() || alpha.width() != sil.width())
    throw ValidationError("silhouette_l1: shape mismatch");
  d_alpha = GridF(alpha.height(), alpha.width(), 1);
  double loss = 0;
  for (int y = 0; y < alpha.height(); ++y)
    for (int x = 0; x < alpha.width(); ++x) {
      const double r = alpha.at(y, x) - double(sil.at(y, x));
      loss += std::abs(r);
      d_alpha.at(y, x) = r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0);
    }
  return loss;
}

struct PretrainResult {
  std::vector<GaussianPrimitive> primitives;
  std::vector<double> loss_history;  // one entry per iteration (sampled view)
};

// Silhouette-only fitting of one part: per iteration, render the part under
// one uniformly sampled view and take an Adam step on the l1 alpha loss.
inline PretrainResult pretrain_part(const std::vector<Vec3d>& points,
                                    const std::vector<SilhouetteView>& views, int part_id,
                                    int iters, const OptimConfig& cfg, uint64_t seed) {
  if (iters < 1) throw ValidationError("pretrain_part: iters must be >= 1");
  if (views.empty()) throw ValidationError("pretrain_part: no views");
  PretrainResult result;
  result.primitives = init_primitives(points, part_id);
  result.loss_history.reserve(iters);
  GaussianOptimizer opt(int(result.primitives.size()), cfg);
  RasterParams params = RasterParams::from(cfg);
  params.with_semantics = false;
  params.with_depth = false;
  Rng rng(seed);
  GridF d_alpha;
  for (int it = 0; it < iters; ++it) {
    const SilhouetteView& view = views[size_t(rng.uniform_int(0, int(views.size()) - 1))];
    RenderOutput out = rasterize_part(result.primitives, view.extrinsic, view.camera, params);
    const double loss = silhouette_l1(out.alpha, view.silhouette, d_alpha);
    if (!std::isfinite(loss))
      throw ValidationError("pretrain_part: non-finite loss at iteration " + std::to_string(it));
    result.loss_history.push_back(loss);
    PixelGrads pg;
    pg.alpha = &d_alpha;
    const PartGrads grads =
        rasterize_backward_part(out, pg, result.primitives, view.extrinsic, view.camera);
    opt.step(result.primitives, grads, cosine_decay(it, iters));
  }
  return result;
}

// Tag per-part fits with their part ids and build the articulated model;
// attribute values pass through untouched.
inline ArticulatedGaussianModel assemble_instrument(
    const std::array<std::vector<GaussianPrimitive>, kNumParts>& fits,
    const KinematicChain& chain) {
  std::vector<std::pair<int, std::vector<GaussianPrimitive>>> parts;
  for (int p = 0; p < kNumParts; ++p) {
    std::vector<GaussianPrimitive> tagged = fits[p];
    for (GaussianPrimitive& g : tagged) g.part_id = p;
    parts.emplace_back(p, std::move(tagged));
  }
  return new_model(parts, chain);
}

}  // namespace artsplat
