#pragma once

#include <artsplat/core/grid.hpp>
#include <artsplat/core/model.hpp>
#include <artsplat/core/parallel.hpp>
#include <artsplat/core/types.hpp>
#include <artsplat/kin/fk.hpp>
#include <artsplat/render/projection.hpp>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace artsplat {

inline constexpr int kTileSize = 16;

struct RasterParams {
  Vec3d background = Vec3d::Zero();
  double sigma_cut = 3.0;            // bounding-rect radius in sigmas
  double alpha_skip = 1.0 / 255.0;   // drop contributions below this alpha
  double t_stop = 1e-4;              // stop compositing once T falls below
  double alpha_max = 0.99;           // saturation clamp
  bool with_semantics = true;
  bool with_depth = true;
  bool with_tape = true;             // record the compositing tape for backward
  int threads = 1;

  static RasterParams from(const OptimConfig& c) {
    RasterParams p;
    p.sigma_cut = c.sigma_cut;
    p.alpha_skip = c.alpha_skip;
    p.t_stop = c.t_stop;
    p.alpha_max = c.alpha_max;
    return p;
  }
};

// One splat already expressed in the camera frame; the common currency of the
// model-level and single-part entry points.
struct SplatInput {
  Vec3d mean_cam;
  Mat3d cov_cam;
  double opacity;     // post-sigmoid
  Vec3d color;
  int part_id;
  int source_index;
};

struct VisibleSplat {
  ProjectedGaussian proj;
  Vec3d mean_cam;
  Mat3d cov_cam;
  double la, lb, lc;          // conic (inverse of cov2d)
  int x0, x1, y0, y1;         // inclusive pixel rect
};

struct TapeEntry {
  int32_t pos;          // position in the tile's splat list
  double alpha;
  double transmittance; // T before this splat
};

// Compositing record for one tile: CSR over the tile's pixels in row-major
// order (within the tile).
struct TileTape {
  std::vector<int> offsets;
  std::vector<TapeEntry> entries;
};

struct RenderOutput {
  int width = 0, height = 0;
  GridF color;          // H x W x 3, composited over the background
  GridF alpha;          // H x W
  GridF semantics;      // H x W x P (soft one-hot compositing)
  GridF depth;          // H x W, alpha-normalized; 0 where alpha <= 1e-3
  GridF depth_premult;  // H x W, sum of z*alpha*T (the differentiable form)
  GridF final_t;        // H x W, transmittance left after compositing

  std::vector<VisibleSplat> visible;
  int tiles_x = 0, tiles_y = 0;
  std::vector<std::vector<int32_t>> tile_splats;  // depth-ordered per tile
  std::vector<TileTape> tapes;                    // empty unless with_tape
  RasterParams params;

  GridU8 semantics_argmax() const {
    GridU8 labels(height, width, 1);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        int best = -1;
        double best_v = 0, total = 0;
        for (int p = 0; p < semantics.channels(); ++p) {
          const double v = semantics.at(y, x, p);
          total += v;
          if (v > best_v) {
            best_v = v;
            best = p;
          }
        }
        // Background wins where the splats cover less than half the pixel.
        labels.at(y, x) = (total >= 0.5 && best >= 0) ? uint8_t(best + 1) : 0;
      }
    return labels;
  }
};

namespace detail {

inline std::vector<VisibleSplat> project_visible(const std::vector<SplatInput>& splats,
                                                 const Camera& cam, const RasterParams& params) {
  std::vector<VisibleSplat> visible;
  visible.reserve(splats.size());
  for (const SplatInput& s : splats) {
    auto proj = project(cam, s.mean_cam, s.cov_cam);
    if (!proj) continue;
    VisibleSplat v;
    v.proj = *proj;
    v.proj.opacity = s.opacity;
    v.proj.color = s.color;
    v.proj.part_id = s.part_id;
    v.proj.source_index = s.source_index;
    v.mean_cam = s.mean_cam;
    v.cov_cam = s.cov_cam;
    const Mat2d& c2 = v.proj.cov2d;
    const double det = c2(0, 0) * c2(1, 1) - c2(0, 1) * c2(0, 1);
    if (!(det > 0) || !c2.allFinite()) continue;
    const double idet = 1.0 / det;
    v.la = c2(1, 1) * idet;
    v.lb = -c2(0, 1) * idet;
    v.lc = c2(0, 0) * idet;
    const double mid = 0.5 * (c2(0, 0) + c2(1, 1));
    const double disc = std::sqrt(std::max(0.0, mid * mid - det));
    const double radius = params.sigma_cut * std::sqrt(std::max(1e-12, mid + disc));
    // Clamp in double first; huge sigma_cut values would overflow the int cast.
    const auto lo = [](double v, int limit) {
      return int(std::clamp(std::floor(v), 0.0, double(limit - 1)));
    };
    const auto hi = [](double v, int limit) {
      return int(std::clamp(std::ceil(v), 0.0, double(limit - 1)));
    };
    v.x0 = lo(v.proj.mean2d.x() - radius, cam.width);
    v.x1 = hi(v.proj.mean2d.x() + radius, cam.width);
    v.y0 = lo(v.proj.mean2d.y() - radius, cam.height);
    v.y1 = hi(v.proj.mean2d.y() + radius, cam.height);
    if (std::floor(v.proj.mean2d.x() - radius) > double(cam.width - 1) ||
        std::ceil(v.proj.mean2d.x() + radius) < 0.0 ||
        std::floor(v.proj.mean2d.y() - radius) > double(cam.height - 1) ||
        std::ceil(v.proj.mean2d.y() + radius) < 0.0)
      continue;
    visible.push_back(v);
  }
  // Front-to-back order; source index breaks exact depth ties so storage
  // permutations cannot change the composite.
  std::sort(visible.begin(), visible.end(), [](const VisibleSplat& a, const VisibleSplat& b) {
    if (a.proj.depth != b.proj.depth) return a.proj.depth < b.proj.depth;
    return a.proj.source_index < b.proj.source_index;
  });
  return visible;
}

}  // namespace detail

inline RenderOutput rasterize_splats(const std::vector<SplatInput>& splats, const Camera& cam,
                                     const RasterParams& params) {
  if (!cam.is_valid()) throw ValidationError("rasterize: invalid camera");
  RenderOutput out;
  out.width = cam.width;
  out.height = cam.height;
  out.params = params;
  const int P = kNumParts;
  out.color = GridF(cam.height, cam.width, 3);
  out.alpha = GridF(cam.height, cam.width, 1);
  out.final_t = GridF(cam.height, cam.width, 1);
  out.final_t.fill(1.0);
  if (params.with_semantics) out.semantics = GridF(cam.height, cam.width, P);
  if (params.with_depth) {
    out.depth = GridF(cam.height, cam.width, 1);
    out.depth_premult = GridF(cam.height, cam.width, 1);
  }
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x)
      for (int c = 0; c < 3; ++c) out.color.at(y, x, c) = params.background[c];

  out.visible = detail::project_visible(splats, cam, params);
  out.tiles_x = (cam.width + kTileSize - 1) / kTileSize;
  out.tiles_y = (cam.height + kTileSize - 1) / kTileSize;
  const int n_tiles = out.tiles_x * out.tiles_y;
  out.tile_splats.assign(n_tiles, {});
  for (int32_t i = 0; i < int32_t(out.visible.size()); ++i) {
    const VisibleSplat& v = out.visible[i];
    for (int ty = v.y0 / kTileSize; ty <= v.y1 / kTileSize; ++ty)
      for (int tx = v.x0 / kTileSize; tx <= v.x1 / kTileSize; ++tx)
        out.tile_splats[ty * out.tiles_x + tx].push_back(i);
  }
  if (params.with_tape) out.tapes.assign(n_tiles, {});

  parallel_for(n_tiles, params.threads, [&](int tile) {
    const int tx = tile % out.tiles_x, ty = tile / out.tiles_x;
    const int px0 = tx * kTileSize, py0 = ty * kTileSize;
    const int px1 = std::min(cam.width, px0 + kTileSize);
    const int py1 = std::min(cam.height, py0 + kTileSize);
    const auto& list = out.tile_splats[tile];
    TileTape* tape = params.with_tape ? &out.tapes[tile] : nullptr;
    if (tape) {
      tape->offsets.reserve((py1 - py0) * (px1 - px0) + 1);
      tape->offsets.push_back(0);
    }
    for (int y = py0; y < py1; ++y) {
      for (int x = px0; x < px1; ++x) {
        const double sx = x + 0.5, sy = y + 0.5;
        double T = 1.0;
        double acc_a = 0, acc_d = 0;
        Vec3d acc_c = Vec3d::Zero();
        std::array<double, kNumParts> acc_s{};
        for (int32_t pos = 0; pos < int32_t(list.size()); ++pos) {
          const VisibleSplat& v = out.visible[list[pos]];
          if (x < v.x0 || x > v.x1 || y < v.y0 || y > v.y1) continue;
          const double dx = sx - v.proj.mean2d.x();
          const double dy = sy - v.proj.mean2d.y();
          const double e = -0.5 * (v.la * dx * dx + 2.0 * v.lb * dx * dy + v.lc * dy * dy);
          const double g = std::exp(e);
          const double a = std::min(params.alpha_max, v.proj.opacity * g);
          if (a < params.alpha_skip) continue;
          const double w = a * T;
          acc_c += w * v.proj.color;
          acc_a += w;
          if (params.with_semantics) acc_s[v.proj.part_id] += w;
          if (params.with_depth) acc_d += w * v.proj.depth;
          if (tape) tape->entries.push_back({pos, a, T});
          T *= 1.0 - a;
          if (T < params.t_stop) break;
        }
        if (tape) tape->offsets.push_back(int(tape->entries.size()));
        for (int c = 0; c < 3; ++c) out.color.at(y, x, c) = acc_c[c] + T * params.background[c];
        out.alpha.at(y, x) = acc_a;
        out.final_t.at(y, x) = T;
        if (params.with_semantics)
          for (int p = 0; p < kNumParts; ++p) out.semantics.at(y, x, p) = acc_s[p];
        if (params.with_depth) {
          out.depth_premult.at(y, x) = acc_d;
          out.depth.at(y, x) = acc_a > 1e-3 ? acc_d / acc_a : 0.0;
        }
      }
    }
  });
  return out;
}

// Camera-frame splat list for a whole model under pose q.
inline std::vector<SplatInput> model_splats(const ArticulatedGaussianModel& model,
                                            const PoseSet& q) {
  const auto fk = forward_kinematics(model.chain(), q.theta);
  const RigidTransform cam_T_shaft = q.cam_T_shaft();
  std::array<RigidTransform, kNumParts> part_T;
  for (int p = 0; p < kNumParts; ++p) part_T[p] = cam_T_shaft.compose(fk[p]);
  std::vector<SplatInput> splats;
  splats.reserve(model.size());
  for (int i = 0; i < model.size(); ++i) {
    const GaussianPrimitive& g = model.primitives()[i];
    const RigidTransform& T = part_T[g.part_id];
    SplatInput s;
    s.mean_cam = T.apply(g.mean.cast<double>());
    const Mat3d basis = T.rotation * g.rotation_matrix();
    const Vec3d s2 = g.scale().array().square();
    s.cov_cam = basis * s2.asDiagonal() * basis.transpose();
    s.opacity = g.opacity();
    s.color = g.color.cast<double>();
    s.part_id = g.part_id;
    s.source_index = i;
    splats.push_back(s);
  }
  return splats;
}

inline RenderOutput rasterize(const ArticulatedGaussianModel& model, const PoseSet& q,
                              const Camera& cam, const RasterParams& params) {
  return rasterize_splats(model_splats(model, q), cam, params);
}

// Single-part rendering under a fixed extrinsic; used by geometry
// pretraining, where no chain exists yet.
inline std::vector<SplatInput> part_splats(const std::vector<GaussianPrimitive>& prims,
                                           const RigidTransform& extrinsic) {
  std::vector<SplatInput> splats;
  splats.reserve(prims.size());
  for (int i = 0; i < int(prims.size()); ++i) {
    const GaussianPrimitive& g = prims[i];
    SplatInput s;
    s.mean_cam = extrinsic.apply(g.mean.cast<double>());
    const Mat3d basis = extrinsic.rotation * g.rotation_matrix();
    const Vec3d s2 = g.scale().array().square();
    s.cov_cam = basis * s2.asDiagonal() * basis.transpose();
    s.opacity = g.opacity();
    s.color = g.color.cast<double>();
    s.part_id = g.part_id;
    s.source_index = i;
    splats.push_back(s);
  }
  return splats;
}

inline RenderOutput rasterize_part(const std::vector<GaussianPrimitive>& prims,
                                   const RigidTransform& extrinsic, const Camera& cam,
                                   const RasterParams& params) {
  return rasterize_splats(part_splats(prims, extrinsic), cam, params);
}

}  // namespace artsplat
