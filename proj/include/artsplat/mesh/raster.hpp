#pragma once

#include <artsplat/core/grid.hpp>
#include <artsplat/core/rng.hpp>
#include <artsplat/core/types.hpp>
#include <artsplat/mesh/mesh.hpp>
#include <artsplat/mesh/texture.hpp>

#include <limits>
#include <vector>

namespace artsplat {

struct MeshInstance {
  const TriangleMesh* mesh = nullptr;
  RigidTransform to_cam;   // part-local -> camera
  int part_id = 0;         // -1 renders as background (label 0) but keeps depth
};

struct MeshShading {
  const ProceduralTexture* texture = nullptr;  // null: flat 0.5 gray albedo
  Vec3d light_dir = Vec3d(0.3, -0.4, 0.85).normalized();  // camera frame
  double ambient = 0.65;
  double diffuse = 0.35;
  Vec3d background = Vec3d::Zero();
};

struct MeshRender {
  GridF depth;    // meters; 0 where nothing was hit
  GridU8 labels;  // 0 background, part_id + 1 otherwise
  GridF color;    // only filled when shading was requested
};

namespace detail {

struct ClipVertex {
  Vec3d cam;
  Vec3d local;
};

// Clip a triangle against z = near; returns 0, 3 or 4 vertices.
inline int clip_near(const ClipVertex in[3], double near, ClipVertex out[4]) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool ia = a.cam.z() > near, ib = b.cam.z() > near;
    if (ia) out[n++] = a;
    if (ia != ib) {
      const double t = (near - a.cam.z()) / (b.cam.z() - a.cam.z());
      out[n++] = {a.cam + t * (b.cam - a.cam), a.local + t * (b.local - a.local)};
    }
  }
  return n;
}

}  // namespace detail

// Single-sample z-buffer rasterization with perspective-correct attribute
// interpolation and flat (per-face, two-sided) shading.
inline MeshRender render_meshes(const std::vector<MeshInstance>& instances, const Camera& cam,
                                const MeshShading* shading = nullptr) {
  if (!cam.is_valid()) throw ValidationError("render_meshes: invalid camera");
  MeshRender out;
  out.depth = GridF(cam.height, cam.width, 1);
  out.depth.fill(std::numeric_limits<double>::infinity());
  out.labels = GridU8(cam.height, cam.width, 1);
  if (shading) {
    out.color = GridF(cam.height, cam.width, 3);
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x)
        for (int c = 0; c < 3; ++c) out.color.at(y, x, c) = shading->background[c];
  }

  for (const MeshInstance& inst : instances) {
    if (!inst.mesh) throw ValidationError("render_meshes: null mesh");
    const TriangleMesh& mesh = *inst.mesh;
    for (int ti = 0; ti < int(mesh.triangles.size()); ++ti) {
      const auto& tri = mesh.triangles[ti];
      detail::ClipVertex cv[3];
      for (int k = 0; k < 3; ++k) {
        cv[k].local = mesh.vertices[tri[k]];
        cv[k].cam = inst.to_cam.apply(cv[k].local);
      }
      detail::ClipVertex poly[4];
      const int n = detail::clip_near(cv, cam.near, poly);
      if (n < 3) continue;

      Vec3d albedo_shade = Vec3d::Zero();
      if (shading) {
        const Vec3d n_cam = (inst.to_cam.rotation * mesh.triangle_normal(ti)).normalized();
        const double lit =
            shading->ambient + shading->diffuse * std::abs(n_cam.dot(shading->light_dir));
        const Vec3d centroid_local = (cv[0].local + cv[1].local + cv[2].local) / 3.0;
        const Vec3d albedo = shading->texture
                                 ? shading->texture->albedo(inst.part_id, centroid_local)
                                 : Vec3d(0.5, 0.5, 0.5);
        albedo_shade = (albedo * lit).cwiseMin(1.0).cwiseMax(0.0);
      }

      for (int f = 2; f < n; ++f) {
        const detail::ClipVertex* v[3] = {&poly[0], &poly[f - 1], &poly[f]};
        Vec2d p[3];
        double iz[3];
        for (int k = 0; k < 3; ++k) {
          p[k] = cam.project(v[k]->cam);
          iz[k] = 1.0 / v[k]->cam.z();
        }
        const double area =
            (p[1] - p[0]).x() * (p[2] - p[0]).y() - (p[1] - p[0]).y() * (p[2] - p[0]).x();
        if (std::abs(area) < 1e-12) continue;
        const double inv_area = 1.0 / area;
        int x0 = std::max(0, int(std::floor(std::min({p[0].x(), p[1].x(), p[2].x()}) - 0.5)));
        int x1 = std::min(cam.width - 1,
                          int(std::ceil(std::max({p[0].x(), p[1].x(), p[2].x()}) - 0.5)));
        int y0 = std::max(0, int(std::floor(std::min({p[0].y(), p[1].y(), p[2].y()}) - 0.5)));
        int y1 = std::min(cam.height - 1,
                          int(std::ceil(std::max({p[0].y(), p[1].y(), p[2].y()}) - 0.5)));
        for (int y = y0; y <= y1; ++y) {
          for (int x = x0; x <= x1; ++x) {
            const Vec2d s(x + 0.5, y + 0.5);
            const double w0 = ((p[1] - s).x() * (p[2] - s).y() - (p[1] - s).y() * (p[2] - s).x()) *
                              inv_area;
            const double w1 = ((p[2] - s).x() * (p[0] - s).y() - (p[2] - s).y() * (p[0] - s).x()) *
                              inv_area;
            const double w2 = 1.0 - w0 - w1;
            if (w0 < 0 || w1 < 0 || w2 < 0) continue;
            const double izp = w0 * iz[0] + w1 * iz[1] + w2 * iz[2];
            const double z = 1.0 / izp;
            if (z >= out.depth.at(y, x) || z > cam.far) continue;
            out.depth.at(y, x) = z;
            out.labels.at(y, x) = inst.part_id >= 0 ? uint8_t(inst.part_id + 1) : 0;
            if (shading) {
              for (int c = 0; c < 3; ++c) out.color.at(y, x, c) = albedo_shade[c];
            }
          }
        }
      }
    }
  }
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x)
      if (!std::isfinite(out.depth.at(y, x))) out.depth.at(y, x) = 0.0;
  return out;
}

struct SilhouetteView {
  Camera camera;
  RigidTransform extrinsic;  // part-local -> camera
  GridU8 silhouette;         // 0/1
  GridF depth;               // harness extra; 0 = empty
};

// Right-handed look-at with +z forward and +y down (image convention).
inline RigidTransform look_at(const Vec3d& eye, const Vec3d& target) {
  Vec3d z = (target - eye).normalized();
  Vec3d up(0, 0, 1);
  if (std::abs(z.dot(up)) > 0.99) up = Vec3d(0, 1, 0);
  const Vec3d x = up.cross(z).normalized();
  const Vec3d y = z.cross(x);
  RigidTransform t;
  t.rotation.row(0) = x;
  t.rotation.row(1) = y;
  t.rotation.row(2) = z;
  t.translation = -(t.rotation * eye);
  return t;
}

// Fibonacci-spiral viewpoints (plus seeded jitter) on a sphere whose radius
// puts the whole mesh comfortably in frame.
inline std::vector<SilhouetteView> render_mesh_silhouettes(const TriangleMesh& mesh, int n_views,
                                                           const Camera& cam, uint64_t seed) {
  if (n_views < 1) throw ValidationError("render_mesh_silhouettes: need at least one view");
  if (!cam.is_valid()) throw ValidationError("render_mesh_silhouettes: invalid camera");
  mesh.validate();
  const Vec3d center = mesh.centroid();
  double r_mesh = 1e-9;
  for (const Vec3d& v : mesh.vertices) r_mesh = std::max(r_mesh, (v - center).norm());
  const double f = 0.5 * (cam.fx + cam.fy);
  const double target_px = 0.25 * std::min(cam.width, cam.height);
  const double dist = std::max(1.6 * r_mesh, f * r_mesh / target_px);

  Rng rng(seed);
  std::vector<SilhouetteView> views;
  views.reserve(n_views);
  constexpr double kGolden = 2.399963229728653;  // 2*pi*(1 - 1/phi)
  for (int i = 0; i < n_views; ++i) {
    const double zf = n_views == 1 ? 0.0 : 1.0 - 2.0 * (i + 0.5) / n_views;
    const double rf = std::sqrt(std::max(0.0, 1.0 - zf * zf));
    const double phi = kGolden * i;
    Vec3d dir(rf * std::cos(phi), rf * std::sin(phi), zf);
    dir = (dir + 0.05 * rng.normal3()).normalized();
    const Vec3d eye = center + dist * dir;
    SilhouetteView view;
    view.camera = cam;
    view.extrinsic = look_at(eye, center);
    MeshInstance inst{&mesh, view.extrinsic, 0};
    MeshRender render = render_meshes({inst}, cam, nullptr);
    view.silhouette = GridU8(cam.height, cam.width, 1);
    int fg = 0;
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) {
        const uint8_t on = render.labels.at(y, x) > 0 ? 1 : 0;
        view.silhouette.at(y, x) = on;
        fg += on;
      }
    if (fg == 0)
      throw ValidationError("render_mesh_silhouettes: view " + std::to_string(i) +
                            " sees no surface");
    view.depth = std::move(render.depth);
    views.push_back(std::move(view));
  }
  return views;
}

}  // namespace artsplat
