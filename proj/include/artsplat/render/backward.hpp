#pragma once

#include <artsplat/render/rasterize.hpp>

#include <vector>

namespace artsplat {

// Upstream per-pixel loss gradients; null grids are treated as zero. The
// depth slot differentiates the premultiplied composite sum(z*alpha*T), not
// the alpha-normalized map.
struct PixelGrads {
  const GridF* color = nullptr;          // H x W x 3
  const GridF* alpha = nullptr;          // H x W
  const GridF* semantics = nullptr;      // H x W x P
  const GridF* depth_premult = nullptr;  // H x W
};

// Screen-space gradients per input splat, indexed by source_index.
struct SplatGrads {
  Vec3d d_mean_cam = Vec3d::Zero();
  Mat3d d_cov_cam = Mat3d::Zero();
  double d_opacity = 0;
  Vec3d d_color = Vec3d::Zero();
};

struct GradientBundle {
  std::vector<Vec3d> d_mean;
  std::vector<Vec4d> d_rotation;   // quaternion (w,x,y,z), unnormalized chart
  std::vector<Vec3d> d_log_scale;
  std::vector<double> d_opacity_logit;
  std::vector<Vec3d> d_color;
  Vec9d d_pose = Vec9d::Zero();

  void resize(int n) {
    d_mean.assign(n, Vec3d::Zero());
    d_rotation.assign(n, Vec4d::Zero());
    d_log_scale.assign(n, Vec3d::Zero());
    d_opacity_logit.assign(n, 0.0);
    d_color.assign(n, Vec3d::Zero());
    d_pose.setZero();
  }
  int size() const { return int(d_mean.size()); }

  void add_scaled(const GradientBundle& o, double s) {
    for (int i = 0; i < size(); ++i) {
      d_mean[i] += s * o.d_mean[i];
      d_rotation[i] += s * o.d_rotation[i];
      d_log_scale[i] += s * o.d_log_scale[i];
      d_opacity_logit[i] += s * o.d_opacity_logit[i];
      d_color[i] += s * o.d_color[i];
    }
    d_pose += s * o.d_pose;
  }

  bool all_finite() const {
    for (int i = 0; i < size(); ++i)
      if (!d_mean[i].allFinite() || !d_rotation[i].allFinite() || !d_log_scale[i].allFinite() ||
          !std::isfinite(d_opacity_logit[i]) || !d_color[i].allFinite())
        return false;
    return d_pose.allFinite();
  }
};

// Derivative of the homogeneous quaternion-to-matrix formula w.r.t. the four
// raw components. Writing R = I + s*B(q) with s = 2/|q|^2 and B quadratic,
// dR/dq_k = s*dB/dq_k - s*q_k*(R - I). The radial component vanishes, so
// gradient steps cannot drift the stored norm.
inline std::array<Mat3d, 4> quat_rotation_derivs(const Vec4d& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  const double s = 2.0 / q.squaredNorm();
  std::array<Mat3d, 4> d;
  d[0] << 0, -z, y, z, 0, -x, -y, x, 0;
  d[1] << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
  d[2] << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
  d[3] << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
  const Mat3d b = quat_to_mat(q) - Mat3d::Identity();  // equals s * B(q)
  for (int k = 0; k < 4; ++k) d[k] = s * (d[k] - q[k] * b);
  return d;
}

// Replays the compositing tape in reverse, accumulating exact gradients of
// the rendered channels w.r.t. each splat's screen-space quantities, then
// pulls them back through the EWA projection (including the dependence of
// the projection Jacobian on the mean).
inline std::vector<SplatGrads> rasterize_backward_splats(const RenderOutput& out,
                                                         const PixelGrads& pg, const Camera& cam,
                                                         int n_source) {
  if (out.tapes.empty())
    throw ValidationError("rasterize_backward: output was rendered without a tape");
  const int P = kNumParts;
  if (pg.semantics && pg.semantics->channels() != P)
    throw ValidationError("rasterize_backward: semantics gradient channel mismatch");

  struct VisAcc {
    Vec2d dmu2 = Vec2d::Zero();
    Mat2d ds2 = Mat2d::Zero();
    double dop = 0, dz = 0;
    Vec3d dc = Vec3d::Zero();
  };
  std::vector<VisAcc> acc(out.visible.size());
  const int n_tiles = out.tiles_x * out.tiles_y;
  // Per-tile partials, merged in tile order afterwards so the result does not
  // depend on the thread count.
  std::vector<std::vector<VisAcc>> tile_acc(n_tiles);

  parallel_for(n_tiles, out.params.threads, [&](int tile) {
    const auto& list = out.tile_splats[tile];
    const TileTape& tape = out.tapes[tile];
    if (list.empty() || tape.entries.empty()) return;
    auto& local = tile_acc[tile];
    local.assign(list.size(), {});
    const int tx = tile % out.tiles_x, ty = tile / out.tiles_x;
    const int px0 = tx * kTileSize, py0 = ty * kTileSize;
    const int px1 = std::min(out.width, px0 + kTileSize);
    const int py1 = std::min(out.height, py0 + kTileSize);
    int pix = 0;
    for (int y = py0; y < py1; ++y) {
      for (int x = px0; x < px1; ++x, ++pix) {
        const int begin = tape.offsets[pix], end = tape.offsets[pix + 1];
        if (begin == end) continue;
        Vec3d dC = Vec3d::Zero();
        double dA = 0, dD = 0;
        std::array<double, kNumParts> dS{};
        bool any = false;
        if (pg.color) {
          for (int c = 0; c < 3; ++c) dC[c] = pg.color->at(y, x, c);
          any = any || dC.squaredNorm() > 0;
        }
        if (pg.alpha) {
          dA = pg.alpha->at(y, x);
          any = any || dA != 0;
        }
        if (pg.semantics) {
          for (int p = 0; p < P; ++p) {
            dS[p] = pg.semantics->at(y, x, p);
            any = any || dS[p] != 0;
          }
        }
        if (pg.depth_premult) {
          dD = pg.depth_premult->at(y, x);
          any = any || dD != 0;
        }
        if (!any) continue;

        const double sx = x + 0.5, sy = y + 0.5;
        // Suffix sums over splats behind the current one; the background
        // plate acts as a virtual last splat with weight final_t.
        Vec3d sC = out.final_t.at(y, x) * out.params.background;
        double sA = 0, sD = 0;
        std::array<double, kNumParts> sS{};
        for (int k = end - 1; k >= begin; --k) {
          const TapeEntry& te = tape.entries[k];
          const VisibleSplat& v = out.visible[list[te.pos]];
          const double a = te.alpha, T = te.transmittance;
          const double w = a * T;
          const double inv1a = 1.0 / (1.0 - a);
          double dLda = 0;
          dLda += dC.dot(v.proj.color * T - sC * inv1a);
          dLda += dA * (T - sA * inv1a);
          if (pg.semantics)
            for (int p = 0; p < P; ++p)
              dLda += dS[p] * ((p == v.proj.part_id ? T : 0.0) - sS[p] * inv1a);
          if (pg.depth_premult) dLda += dD * (v.proj.depth * T - sD * inv1a);

          VisAcc& va = local[te.pos];
          va.dc += w * dC;
          if (pg.depth_premult) va.dz += w * dD;

          const double dx = sx - v.proj.mean2d.x();
          const double dy = sy - v.proj.mean2d.y();
          const double e = -0.5 * (v.la * dx * dx + 2.0 * v.lb * dx * dy + v.lc * dy * dy);
          const double g = std::exp(e);
          if (v.proj.opacity * g < out.params.alpha_max) {  // clamp gates the alpha path
            va.dop += dLda * g;
            const double dg = dLda * v.proj.opacity * g;
            const Vec2d lam_d(v.la * dx + v.lb * dy, v.lb * dx + v.lc * dy);
            va.dmu2 += dg * lam_d;
            va.ds2 += 0.5 * dg * (lam_d * lam_d.transpose());
          }
          sC += w * v.proj.color;
          sA += w;
          sS[v.proj.part_id] += w;
          sD += w * v.proj.depth;
        }
      }
    }
  });
  for (int tile = 0; tile < n_tiles; ++tile) {
    const auto& local = tile_acc[tile];
    if (local.empty()) continue;
    const auto& list = out.tile_splats[tile];
    for (size_t k = 0; k < local.size(); ++k) {
      VisAcc& g = acc[list[k]];
      const VisAcc& l = local[k];
      g.dmu2 += l.dmu2;
      g.ds2 += l.ds2;
      g.dop += l.dop;
      g.dz += l.dz;
      g.dc += l.dc;
    }
  }

  std::vector<SplatGrads> grads(n_source);
  for (size_t vi = 0; vi < out.visible.size(); ++vi) {
    const VisibleSplat& v = out.visible[vi];
    if (v.proj.source_index < 0 || v.proj.source_index >= n_source)
      throw ValidationError("rasterize_backward: tape refers to a splat outside the model");
    const VisAcc& a = acc[vi];
    SplatGrads& sg = grads[v.proj.source_index];
    const Mat23d j = projection_jacobian(cam, v.mean_cam);
    sg.d_mean_cam += j.transpose() * a.dmu2;
    sg.d_mean_cam.z() += a.dz;
    const Mat23d j_cov = j * v.cov_cam;  // J * cov_cam, reused per axis
    for (int m = 0; m < 3; ++m) {
      const Mat23d dj = projection_jacobian_deriv(cam, v.mean_cam, m);
      const Mat2d dcov2d = dj * j_cov.transpose() + j_cov * dj.transpose();
      sg.d_mean_cam[m] += (a.ds2.array() * dcov2d.array()).sum();
    }
    sg.d_cov_cam += j.transpose() * a.ds2 * j;
    sg.d_opacity += a.dop;
    sg.d_color += a.dc;
  }
  return grads;
}

// Shared pullback from one splat's camera-frame gradients to the stored
// primitive attributes. R_part is the part-to-camera rotation; the returned
// d_R_part / d_t_part carry the pose path.
struct PrimPullback {
  Vec3d d_mean_local;
  Vec4d d_quat;
  Vec3d d_log_scale;
  double d_opacity_logit;
  Vec3d d_color;
  Mat3d d_R_part;
  Vec3d d_t_part;
};

inline PrimPullback pullback_primitive(const GaussianPrimitive& prim, const Mat3d& R_part,
                                       const SplatGrads& sg) {
  PrimPullback pb;
  const Vec3d m = prim.mean.cast<double>();
  pb.d_mean_local = R_part.transpose() * sg.d_mean_cam;
  pb.d_R_part = sg.d_mean_cam * m.transpose();
  pb.d_t_part = sg.d_mean_cam;

  const Mat3d r_q = prim.rotation_matrix();
  const Mat3d basis = R_part * r_q;
  const Vec3d s2 = prim.scale().array().square();
  const Mat3d& A = sg.d_cov_cam;
  const Mat3d d_basis = (A + A.transpose()) * basis * s2.asDiagonal();
  const Mat3d bab = basis.transpose() * A * basis;
  for (int k = 0; k < 3; ++k) pb.d_log_scale[k] = bab(k, k) * 2.0 * s2[k];
  const Mat3d d_rq = R_part.transpose() * d_basis;
  pb.d_R_part += d_basis * r_q.transpose();
  const auto dq = quat_rotation_derivs(prim.rotation.cast<double>());
  for (int k = 0; k < 4; ++k) pb.d_quat[k] = (d_rq.array() * dq[k].array()).sum();

  const double o = prim.opacity();
  pb.d_opacity_logit = sg.d_opacity * o * (1.0 - o);
  pb.d_color = sg.d_color;
  return pb;
}

inline GradientBundle rasterize_backward(const RenderOutput& out, const PixelGrads& pg,
                                         const ArticulatedGaussianModel& model, const PoseSet& q,
                                         const Camera& cam) {
  const auto sg = rasterize_backward_splats(out, pg, cam, model.size());
  const auto derivs = pose_part_derivs(model.chain(), q);
  GradientBundle bundle;
  bundle.resize(model.size());
  for (int i = 0; i < model.size(); ++i) {
    const GaussianPrimitive& prim = model.primitives()[i];
    const PosedPartDerivs& pd = derivs[prim.part_id];
    const PrimPullback pb = pullback_primitive(prim, pd.T.rotation, sg[i]);
    bundle.d_mean[i] = pb.d_mean_local;
    bundle.d_rotation[i] = pb.d_quat;
    bundle.d_log_scale[i] = pb.d_log_scale;
    bundle.d_opacity_logit[i] = pb.d_opacity_logit;
    bundle.d_color[i] = pb.d_color;
    for (int k = 0; k < kPoseParams; ++k) {
      if (!pd.active[k]) continue;
      bundle.d_pose[k] += (pb.d_R_part.array() * pd.d_rotation[k].array()).sum() +
                          pb.d_t_part.dot(pd.d_translation[k]);
    }
  }
  return bundle;
}

// Attribute gradients for a free-standing part under a fixed extrinsic.
struct PartGrads {
  std::vector<Vec3d> d_mean;
  std::vector<Vec4d> d_rotation;
  std::vector<Vec3d> d_log_scale;
  std::vector<double> d_opacity_logit;
  std::vector<Vec3d> d_color;
};

inline PartGrads rasterize_backward_part(const RenderOutput& out, const PixelGrads& pg,
                                         const std::vector<GaussianPrimitive>& prims,
                                         const RigidTransform& extrinsic, const Camera& cam) {
  const auto sg = rasterize_backward_splats(out, pg, cam, int(prims.size()));
  PartGrads g;
  const int n = int(prims.size());
  g.d_mean.resize(n);
  g.d_rotation.resize(n);
  g.d_log_scale.resize(n);
  g.d_opacity_logit.resize(n);
  g.d_color.resize(n);
  for (int i = 0; i < n; ++i) {
    const PrimPullback pb = pullback_primitive(prims[i], extrinsic.rotation, sg[i]);
    g.d_mean[i] = pb.d_mean_local;
    g.d_rotation[i] = pb.d_quat;
    g.d_log_scale[i] = pb.d_log_scale;
    g.d_opacity_logit[i] = pb.d_opacity_logit;
    g.d_color[i] = pb.d_color;
  }
  return g;
}

}  // namespace artsplat
