#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "artsplat/core/chain.hpp"
#include "artsplat/core/rng.hpp"
#include "artsplat/core/types.hpp"
#include "artsplat/kin/fk.hpp"
#include "artsplat/kin/se3.hpp"
#include "artsplat/mesh/mesh.hpp"
#include "artsplat/mesh/raster.hpp"
#include "artsplat/mesh/texture.hpp"

namespace artsplat {

struct SyntheticSpec {
  uint64_t seed = 11;
  int n_frames = 100;
  int width = 320, height = 256;
  double fx = 300, fy = 300;

  // Part geometry (meters).
  double shaft_radius = 0.004, shaft_length = 0.10;
  int shaft_segments = 24;
  Vec3d wrist_size = Vec3d(0.008, 0.006, 0.012);  // x, y full widths; z length
  double jaw_length = 0.022;
  double jaw_base_halfwidth = 0.003, jaw_tip_halfwidth = 0.0008;
  double jaw_thickness = 0.0045;
  double texture_scale = 150.0;

  // Trajectory. Control knots sit every frames_per_control frames, so the
  // per-frame motion rate is independent of sequence length.
  int frames_per_control = 20;
  double standoff = 0.22;                  // camera distance to the wrist pivot
  double joint_amplitude = 0.16;           // fraction of usable joint range
  double rigid_trans_amplitude = 0.012;    // meters
  double rigid_rot_amplitude = 0.12;       // radians
  double max_joint_delta = 0.08;           // allowed per-frame joint change
  double limit_margin = 0.05;              // keep this far inside joint limits

  // Noise models.
  int mask_erode_px = 0;
  int mask_dilate_px = 0;
  double pose_noise_theta_deg = 0;
  double pose_noise_rot_deg = 0;
  double pose_noise_trans_mm = 0;

  // Background plate.
  double plate_z = 0.36, plate_tilt = 0.10, plate_half = 0.35;

  Camera camera() const {
    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.width = width;
    cam.height = height;
    return cam;
  }
};

struct WorldKeypoint {
  int part_id = 0;
  Vec3d local = Vec3d::Zero();
};

struct SyntheticWorld {
  SyntheticSpec spec;
  KinematicChain chain;
  std::array<TriangleMesh, kNumParts> part_meshes;
  TriangleMesh plate;
  ProceduralTexture texture{0};
  Camera camera;
  std::vector<PoseSet> trajectory;  // nominal poses, one per frame
  std::array<WorldKeypoint, 5> keypoints;
};

struct SyntheticFrameBundle {
  Frame frame;           // gt depth and tips ride along in the optional fields
  PoseSet q_render;      // pose the frame was rendered at (after jitter)
  PoseSet q_nominal;     // spline pose (before jitter)
  std::vector<Vec2d> keypoints_2d;  // at q_render, one per world keypoint
};

namespace detail {

inline void add_quad(TriangleMesh& m, int a, int b, int c, int d) {
  m.triangles.push_back({a, b, c});
  m.triangles.push_back({a, c, d});
}

inline TriangleMesh cylinder_mesh(double radius, double z0, double z1,
                                  int segments, int stacks = 5) {
  TriangleMesh m;
  for (int s = 0; s <= stacks; ++s) {
    const double z = z0 + (z1 - z0) * s / stacks;
    for (int i = 0; i < segments; ++i) {
      const double a = 2.0 * kPi * i / segments;
      m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), z);
    }
  }
  const int c0 = int(m.vertices.size());
  m.vertices.emplace_back(0, 0, z0);
  const int c1 = int(m.vertices.size());
  m.vertices.emplace_back(0, 0, z1);
  for (int s = 0; s < stacks; ++s) {
    const int r0 = s * segments, r1 = (s + 1) * segments;
    for (int i = 0; i < segments; ++i) {
      const int j = (i + 1) % segments;
      add_quad(m, r0 + i, r0 + j, r1 + j, r1 + i);
    }
  }
  const int top = stacks * segments;
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    m.triangles.push_back({c0, j, i});
    m.triangles.push_back({c1, top + i, top + j});
  }
  return m;
}

inline TriangleMesh hexahedron_mesh(const std::array<Vec3d, 8>& c) {
  // Corner layout: bit0 = +x, bit1 = +y, bit2 = +z.
  TriangleMesh m;
  m.vertices.assign(c.begin(), c.end());
  add_quad(m, 0, 2, 6, 4);  // x-
  add_quad(m, 1, 5, 7, 3);  // x+
  add_quad(m, 0, 4, 5, 1);  // y-
  add_quad(m, 2, 3, 7, 6);  // y+
  add_quad(m, 0, 1, 3, 2);  // z-
  add_quad(m, 4, 6, 7, 5);  // z+
  return m;
}

inline TriangleMesh box_mesh(const Vec3d& lo, const Vec3d& hi) {
  std::array<Vec3d, 8> c;
  for (int i = 0; i < 8; ++i)
    c[i] = Vec3d(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(),
                 i & 4 ? hi.z() : lo.z());
  return hexahedron_mesh(c);
}

// Tapered jaw along +z; side selects which side of the hinge pin the jaw
// occupies in y (+1 left tooltip, -1 right gripper).
inline TriangleMesh jaw_mesh(const SyntheticSpec& s, int side) {
  const double y0 = side > 0 ? 0.0 : -s.jaw_thickness;
  const double y1 = side > 0 ? s.jaw_thickness : 0.0;
  const double zb = 0.002, zt = s.jaw_length;
  const double wb = s.jaw_base_halfwidth, wt = s.jaw_tip_halfwidth;
  std::array<Vec3d, 8> c;
  for (int i = 0; i < 8; ++i) {
    const double w = i & 4 ? wt : wb;
    const double z = i & 4 ? zt : zb;
    c[i] = Vec3d(i & 1 ? w : -w, i & 2 ? y1 : y0, z);
  }
  return hexahedron_mesh(c);
}

// Natural cubic spline on uniform knots 0..n-1.
class NaturalSpline {
 public:
  explicit NaturalSpline(std::vector<double> values) : c_(std::move(values)) {
    const int n = int(c_.size());
    m_.assign(n, 0.0);
    if (n < 3) return;
    std::vector<double> diag(n, 4.0), rhs(n, 0.0), upper(n, 1.0);
    for (int i = 1; i + 1 < n; ++i)
      rhs[i] = 6.0 * (c_[i - 1] - 2.0 * c_[i] + c_[i + 1]);
    // Thomas algorithm on the interior rows (natural ends: m_0 = m_{n-1} = 0).
    for (int i = 2; i + 1 < n; ++i) {
      const double f = 1.0 / diag[i - 1];
      diag[i] -= f * upper[i - 1];
      rhs[i] -= f * rhs[i - 1];
    }
    for (int i = n - 2; i >= 1; --i)
      m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
    m_[n - 1] = 0.0;
  }

  double eval(double t) const {
    const int n = int(c_.size());
    if (n == 1) return c_[0];
    t = std::clamp(t, 0.0, double(n - 1));
    const int i = std::min(int(std::floor(t)), n - 2);
    const double u = t - i;
    const double a = c_[i], b = c_[i + 1];
    return a + u * (b - a - (2.0 * m_[i] + m_[i + 1]) / 6.0) +
           u * u * (m_[i] / 2.0) + u * u * u * ((m_[i + 1] - m_[i]) / 6.0);
  }

 private:
  std::vector<double> c_;
  std::vector<double> m_;
};

inline NaturalSpline random_spline(Rng& rng, int controls) {
  std::vector<double> c(controls);
  for (double& v : c) v = rng.uniform(-1.0, 1.0);
  return NaturalSpline(std::move(c));
}

// Rotation whose +z column points along dir (right-handed, y chosen near the
// world y axis).
inline Mat3d frame_toward(const Vec3d& dir) {
  const Vec3d zc = dir.normalized();
  Vec3d xc = Vec3d(0, 1, 0).cross(zc);
  if (xc.norm() < 1e-6) xc = Vec3d(1, 0, 0).cross(zc);
  xc.normalize();
  const Vec3d yc = zc.cross(xc);
  Mat3d r;
  r.col(0) = xc;
  r.col(1) = yc;
  r.col(2) = zc;
  return r;
}

}  // namespace detail

inline KinematicChain make_synthetic_chain(const SyntheticSpec& s) {
  KinematicChain chain;
  chain.joints[0].frame = RigidTransform{};  // wrist pivot at the shaft origin
  chain.joints[0].axis = Vec3d::UnitX();
  chain.joints[0].limit_min = -kPi / 2;
  chain.joints[0].limit_max = kPi / 2;
  chain.joints[1].frame =
      RigidTransform{Mat3d::Identity(), Vec3d(0, 0, s.wrist_size.z())};
  chain.joints[1].axis = Vec3d::UnitY();
  chain.joints[1].limit_min = -kPi / 2;
  chain.joints[1].limit_max = kPi / 2;
  chain.joints[2].frame = RigidTransform{};  // coaxial with joint 2
  chain.joints[2].axis = Vec3d::UnitY();
  chain.joints[2].limit_min = 0;
  chain.joints[2].limit_max = kPi / 2;
  chain.tip_right = Vec3d(0, -0.5 * s.jaw_thickness, s.jaw_length);
  chain.tip_left = Vec3d(0, 0.5 * s.jaw_thickness, s.jaw_length);
  chain.validate();
  return chain;
}

inline SyntheticWorld make_synthetic_world(const SyntheticSpec& spec) {
  if (spec.n_frames < 1 || spec.frames_per_control < 1)
    throw ValidationError("make_synthetic_world: bad frame or control count");
  const int controls =
      std::max(2, (spec.n_frames - 1) / spec.frames_per_control + 2);
  SyntheticWorld w;
  w.spec = spec;
  w.camera = spec.camera();
  w.chain = make_synthetic_chain(spec);
  w.part_meshes[kShaft] = detail::cylinder_mesh(spec.shaft_radius,
                                                -spec.shaft_length, 0.0,
                                                spec.shaft_segments);
  const Vec3d half(0.5 * spec.wrist_size.x(), 0.5 * spec.wrist_size.y(), 0.0);
  w.part_meshes[kWrist] =
      detail::box_mesh(-half, Vec3d(half.x(), half.y(), spec.wrist_size.z()));
  w.part_meshes[kGripperRight] = detail::jaw_mesh(spec, -1);
  w.part_meshes[kTooltipLeft] = detail::jaw_mesh(spec, +1);
  for (auto& m : w.part_meshes) m.validate();

  // Tilted background plate well behind the instrument workspace.
  {
    const double h = spec.plate_half;
    TriangleMesh& p = w.plate;
    auto z = [&](double y) { return spec.plate_z + spec.plate_tilt * y; };
    p.vertices = {Vec3d(-h, -h, z(-h)), Vec3d(h, -h, z(-h)), Vec3d(h, h, z(h)),
                  Vec3d(-h, h, z(h))};
    p.triangles = {{0, 1, 2}, {0, 2, 3}};
  }

  w.texture = ProceduralTexture(spec.seed, spec.texture_scale);

  // Base rigid pose: wrist pivot near the optical axis at standoff, shaft
  // receding up-left, jaws angled toward the camera.
  const Mat3d r0 = detail::frame_toward(Vec3d(0.55, 0.35, -0.76));
  const RigidTransform base{r0, Vec3d(0.005, -0.008, spec.standoff)};

  Rng rng(spec.seed);
  Rng joint_rng = rng.fork(1);
  Rng rigid_rng = rng.fork(2);
  std::array<detail::NaturalSpline, 3> joint_splines = {
      detail::random_spline(joint_rng, controls),
      detail::random_spline(joint_rng, controls),
      detail::random_spline(joint_rng, controls)};
  std::array<detail::NaturalSpline, 6> rigid_splines = {
      detail::random_spline(rigid_rng, controls),
      detail::random_spline(rigid_rng, controls),
      detail::random_spline(rigid_rng, controls),
      detail::random_spline(rigid_rng, controls),
      detail::random_spline(rigid_rng, controls),
      detail::random_spline(rigid_rng, controls)};

  // Joint centers and amplitudes sit inside the limits by limit_margin even
  // though the spline can overshoot its control values slightly.
  std::array<double, 3> center{}, amp{};
  for (int j = 0; j < 3; ++j) {
    const double lo = w.chain.joints[j].limit_min + spec.limit_margin;
    const double hi = w.chain.joints[j].limit_max - spec.limit_margin;
    center[j] = 0.5 * (lo + hi);
    amp[j] = spec.joint_amplitude * (hi - lo);
  }

  w.trajectory.resize(spec.n_frames);
  for (int i = 0; i < spec.n_frames; ++i) {
    const double t = double(i) / spec.frames_per_control;
    PoseSet q;
    for (int j = 0; j < 3; ++j)
      q.theta[j] = center[j] + amp[j] * joint_splines[j].eval(t);
    Vec6d delta;
    for (int k = 0; k < 3; ++k) {
      delta[k] = spec.rigid_trans_amplitude * rigid_splines[k].eval(t);
      delta[3 + k] = spec.rigid_rot_amplitude * rigid_splines[3 + k].eval(t);
    }
    q.xi = log_se3(exp_se3(delta).compose(base));
    if (!w.chain.within_limits(q.theta))
      throw ValidationError("make_synthetic_world: spline leaves joint limits at frame " +
                            std::to_string(i));
    w.trajectory[i] = q;
  }
  for (int i = 1; i < spec.n_frames; ++i)
    for (int j = 0; j < 3; ++j)
      if (std::abs(w.trajectory[i].theta[j] - w.trajectory[i - 1].theta[j]) >
          spec.max_joint_delta)
        throw ValidationError(
            "make_synthetic_world: joint delta exceeds bound at frame " +
            std::to_string(i));

  w.keypoints = {WorldKeypoint{kShaft, Vec3d(spec.shaft_radius, 0, -0.75 * spec.shaft_length)},
                 WorldKeypoint{kShaft, Vec3d(-spec.shaft_radius, 0, -0.30 * spec.shaft_length)},
                 WorldKeypoint{kWrist, Vec3d(0.5 * spec.wrist_size.x(), 0,
                                             0.5 * spec.wrist_size.z())},
                 WorldKeypoint{kGripperRight,
                               Vec3d(0, -spec.jaw_thickness, 0.5 * spec.jaw_length)},
                 WorldKeypoint{kTooltipLeft,
                               Vec3d(0, spec.jaw_thickness, 0.5 * spec.jaw_length)}};
  return w;
}

namespace detail {

// Square-structuring-element erosion (shrink = true) or dilation of the label
// map; dilation copies the label of the nearest foreground pixel.
inline void morph_labels(GridU8& labels, int radius, bool shrink) {
  if (radius <= 0) return;
  const int h = labels.height(), w = labels.width();
  GridU8 src = labels;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (shrink) {
        if (src.at(y, x, 0) == 0) continue;
        bool keep = true;
        for (int dy = -radius; dy <= radius && keep; ++dy)
          for (int dx = -radius; dx <= radius && keep; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= h || xx < 0 || xx >= w ||
                src.at(yy, xx, 0) == 0)
              keep = false;
          }
        if (!keep) labels.at(y, x, 0) = 0;
      } else {
        if (src.at(y, x, 0) != 0) continue;
        int best = 0;
        double best_d = 1e18;
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
            const uint8_t v = src.at(yy, xx, 0);
            if (v == 0) continue;
            const double d = double(dx) * dx + double(dy) * dy;
            if (d < best_d) {
              best_d = d;
              best = v;
            }
          }
        if (best != 0) labels.at(y, x, 0) = uint8_t(best);
      }
    }
  }
}

}  // namespace detail

inline SyntheticFrameBundle render_ground_truth(const SyntheticWorld& w,
                                                int frame_idx) {
  if (frame_idx < 0 || frame_idx >= int(w.trajectory.size()))
    throw ValidationError("render_ground_truth: frame index out of range");
  const SyntheticSpec& s = w.spec;
  Rng rng = Rng(s.seed).fork(1000 + uint64_t(frame_idx));

  SyntheticFrameBundle out;
  out.q_nominal = w.trajectory[frame_idx];
  out.q_render = out.q_nominal;
  if (s.pose_noise_theta_deg > 0 || s.pose_noise_rot_deg > 0 ||
      s.pose_noise_trans_mm > 0) {
    for (int j = 0; j < 3; ++j)
      out.q_render.theta[j] += deg_to_rad(s.pose_noise_theta_deg) * rng.normal();
    out.q_render.theta = w.chain.clamp_theta(out.q_render.theta);
    Vec6d n;
    for (int k = 0; k < 3; ++k) n[k] = 1e-3 * s.pose_noise_trans_mm * rng.normal();
    for (int k = 3; k < 6; ++k) n[k] = deg_to_rad(s.pose_noise_rot_deg) * rng.normal();
    out.q_render.xi = log_se3(exp_se3(n).compose(exp_se3(out.q_render.xi)));
  }

  const auto part_T = forward_kinematics(w.chain, out.q_render.theta);
  const RigidTransform cam_T_shaft = out.q_render.cam_T_shaft();
  std::vector<MeshInstance> instances;
  for (int p = 0; p < kNumParts; ++p)
    instances.push_back({&w.part_meshes[p], cam_T_shaft.compose(part_T[p]), p});
  instances.push_back({&w.plate, RigidTransform{}, -1});

  MeshShading shading;
  shading.texture = &w.texture;
  const MeshRender mr = render_meshes(instances, w.camera, &shading);

  Frame& f = out.frame;
  f.rgb = mr.color;
  f.part_semantics = mr.labels;
  f.instrument_mask = GridU8(s.height, s.width, 1);
  GridF depth(s.height, s.width, 1);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const double z = mr.depth.at(y, x, 0);
      depth.at(y, x, 0) = std::isfinite(z) ? z : 0.0;
    }
  f.depth = std::move(depth);

  detail::morph_labels(f.part_semantics, s.mask_erode_px, true);
  detail::morph_labels(f.part_semantics, s.mask_dilate_px, false);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x)
      f.instrument_mask.at(y, x, 0) = f.part_semantics.at(y, x, 0) != 0;

  // Ground-truth tips, keypoints, and shaft-surface correspondences.
  std::vector<Vec2d> tips;
  for (const TipProjection& tp : tip_points(w.chain, out.q_render, w.camera))
    if (tp.visible && tp.pixel.x() >= 0 && tp.pixel.x() < s.width &&
        tp.pixel.y() >= 0 && tp.pixel.y() < s.height)
      tips.push_back(tp.pixel);
  f.tips_2d = std::move(tips);

  for (const WorldKeypoint& kp : w.keypoints) {
    const Vec3d p_cam = cam_T_shaft.compose(part_T[kp.part_id]).apply(kp.local);
    out.keypoints_2d.push_back(w.camera.project(p_cam));
  }

  std::vector<std::pair<Vec2d, Vec3d>> cand;
  const TriangleMesh& shaft = w.part_meshes[kShaft];
  for (size_t vi = 0; vi < shaft.vertices.size(); ++vi) {
    const Vec3d& X = shaft.vertices[vi];  // shaft frame is the root frame
    const Vec3d p_cam = cam_T_shaft.apply(X);
    if (p_cam.z() <= w.camera.near) continue;
    const Vec2d px = w.camera.project(p_cam);
    const int u = int(std::floor(px.x())), v = int(std::floor(px.y()));
    if (u < 0 || u >= s.width || v < 0 || v >= s.height) continue;
    const double zbuf = mr.depth.at(v, u, 0);
    if (!std::isfinite(zbuf) || std::abs(zbuf - p_cam.z()) > 0.003) continue;
    cand.emplace_back(px, X);
  }
  // Subsample evenly so the set spans the whole visible shaft instead of
  // clustering on one end ring (coplanar points would break PnP).
  std::vector<std::pair<Vec2d, Vec3d>> corr;
  const size_t want = 24;
  if (cand.size() > want)
    for (size_t k = 0; k < want; ++k) corr.push_back(cand[k * cand.size() / want]);
  else
    corr = std::move(cand);
  if (corr.size() >= 6) f.correspondences = std::move(corr);
  return out;
}

}  // namespace artsplat
