#include <catch2/catch_amalgamated.hpp>

#include "artsplat/mesh/mesh.hpp"
#include "artsplat/mesh/raster.hpp"
#include "artsplat/mesh/sample.hpp"
#include "artsplat/mesh/texture.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace artsplat;

namespace {

Camera mesh_cam(int size) {
  Camera c;
  c.fx = c.fy = 100;
  c.cx = c.cy = size / 2.0 - 0.5;
  c.width = c.height = size;
  return c;
}

TriangleMesh cube_mesh(double half) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back(half * Vec3d(i & 1 ? 1 : -1, i & 2 ? 1 : -1, i & 4 ? 1 : -1));
  const int quads[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1},
                           {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
  for (const auto& q : quads) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  return m;
}

// Two triangles forming an axis-aligned square at constant camera depth z.
void push_wall(std::vector<Vec3d>& verts, std::vector<std::array<int, 3>>& tris, double half,
               double z) {
  const int b = int(verts.size());
  verts.push_back({-half, -half, z});
  verts.push_back({half, -half, z});
  verts.push_back({half, half, z});
  verts.push_back({-half, half, z});
  tris.push_back({b, b + 1, b + 2});
  tris.push_back({b, b + 2, b + 3});
}

std::string tmp_obj_path(const std::string& name) {
  return "/tmp/artsplat_mesh_test_" + name + ".obj";
}

}  // namespace

TEST_CASE("obj parsing handles the directive zoo") {
  std::istringstream in(R"(# toy model
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
vn 0 0 1
vt 0.5 0.5
o thing
g grp
s off
usemtl steel
mtllib none.mtl
f 1 2 3
f 1/1 2/1/1 3//1
f -4 -3 -2 -1
)");
  const TriangleMesh m = parse_obj(in);
  REQUIRE(m.vertices.size() == 4);
  REQUIRE(m.vertices[2] == Vec3d(1, 1, 0));
  REQUIRE(m.triangles.size() == 4);  // quad fan-triangulates into two
  REQUIRE(m.triangles[0] == std::array<int, 3>{0, 1, 2});
  REQUIRE(m.triangles[1] == std::array<int, 3>{0, 1, 2});  // slash forms
  REQUIRE(m.triangles[2] == std::array<int, 3>{0, 1, 2});  // negative indices
  REQUIRE(m.triangles[3] == std::array<int, 3>{0, 2, 3});
}

TEST_CASE("obj parsing rejects malformed input with line numbers") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_obj(in);
  };
  REQUIRE_THROWS_WITH(parse("v 1 2\n"), Catch::Matchers::ContainsSubstring("line 1: bad vertex"));
  REQUIRE_THROWS_WITH(parse("v 0 0 0\nf 1 2 9\n"),
                      Catch::Matchers::ContainsSubstring("line 2: vertex index out of range"));
  REQUIRE_THROWS_WITH(parse("v 0 0 0\nf 1 x 1\n"),
                      Catch::Matchers::ContainsSubstring("bad face token 'x'"));
  REQUIRE_THROWS_WITH(parse("v 0 0 0\nf 0 1 1\n"),
                      Catch::Matchers::ContainsSubstring("bad face token '0'"));
  REQUIRE_THROWS_WITH(parse("v 0 0 0\nv 1 0 0\nf 1 2\n"),
                      Catch::Matchers::ContainsSubstring("face needs >= 3 vertices"));
  REQUIRE_THROWS_AS(load_mesh("/tmp/definitely_missing_937261.obj"), IoError);
}

TEST_CASE("obj save and load round-trips exactly") {
  TriangleMesh m = cube_mesh(0.0123456789);
  m.vertices[3] += Vec3d(1e-17, -0.1, 0.25);
  const std::string path = tmp_obj_path("roundtrip");
  save_mesh(path, m);
  const TriangleMesh back = load_mesh(path);
  REQUIRE(back.vertices.size() == m.vertices.size());
  REQUIRE(back.triangles == m.triangles);
  for (size_t i = 0; i < m.vertices.size(); ++i)
    for (int k = 0; k < 3; ++k) REQUIRE(back.vertices[i][k] == m.vertices[i][k]);
  std::remove(path.c_str());

  TriangleMesh bad = m;
  bad.triangles.push_back({0, 1, 99});
  REQUIRE_THROWS_AS(save_mesh(tmp_obj_path("bad"), bad), ValidationError);
}

TEST_CASE("triangle geometry helpers match hand values") {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}};
  m.triangles = {{0, 1, 2}, {0, 1, 3}};  // the second is degenerate (collinear)
  REQUIRE((m.triangle_normal(0) - Vec3d(0, 0, 1)).norm() < 1e-15);
  REQUIRE(m.triangle_area(0) == 0.5);
  REQUIRE(m.triangle_normal(1) == Vec3d::Zero());
  REQUIRE(m.triangle_area(1) == 0.0);
  REQUIRE(m.surface_area() == 0.5);
  Vec3d lo, hi;
  m.bounding_box(lo, hi);
  REQUIRE(lo == Vec3d(0, 0, 0));
  REQUIRE(hi == Vec3d(2, 1, 0));
  REQUIRE((m.centroid() - Vec3d(0.75, 0.25, 0)).norm() < 1e-15);

  const TriangleMesh cube = cube_mesh(0.5);
  REQUIRE(cube.surface_area() == Catch::Approx(6.0).margin(1e-12));
  REQUIRE(cube.centroid().norm() < 1e-15);

  TriangleMesh empty;
  REQUIRE_THROWS_AS(empty.bounding_box(lo, hi), ValidationError);
}

TEST_CASE("ray-triangle intersection hits, misses and respects direction") {
  const Vec3d a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
  const auto hit = ray_triangle({0.25, 0.25, -1}, {0, 0, 1}, a, b, c);
  REQUIRE(hit.has_value());
  REQUIRE(*hit == Catch::Approx(1.0).margin(1e-12));
  REQUIRE_FALSE(ray_triangle({0.9, 0.9, -1}, {0, 0, 1}, a, b, c).has_value());  // u+v > 1
  REQUIRE_FALSE(ray_triangle({-0.1, 0.5, -1}, {0, 0, 1}, a, b, c).has_value());
  REQUIRE_FALSE(ray_triangle({0.25, 0.25, 1}, {0, 0, 1}, a, b, c).has_value());  // behind
  REQUIRE_FALSE(ray_triangle({0.25, 0.25, -1}, {1, 0, 0}, a, b, c).has_value());  // parallel

  TriangleMesh m;
  m.vertices = {a, b, c, {0, 0, 2}, {1, 0, 2}, {0, 1, 2}};
  m.triangles = {{3, 4, 5}, {0, 1, 2}};  // far triangle listed first
  const auto p = first_hit(m, {0.25, 0.25, -1}, {0, 0, 1});
  REQUIRE(p.has_value());
  REQUIRE((*p - Vec3d(0.25, 0.25, 0)).norm() < 1e-12);  // nearest hit wins
  REQUIRE_FALSE(first_hit(m, {5, 5, -1}, {0, 0, 1}).has_value());
}

TEST_CASE("ray sampling lands on the surface deterministically") {
  const double half = 0.01;
  const TriangleMesh cube = cube_mesh(half);
  const auto pts = sample_surface_rays(cube, 400, 77);
  REQUIRE(int(pts.size()) == 400);
  for (const Vec3d& p : pts) {
    double closest_face = 1e9;
    for (int k = 0; k < 3; ++k) {
      REQUIRE(std::abs(p[k]) <= half + 1e-9);
      closest_face = std::min(closest_face, std::abs(std::abs(p[k]) - half));
    }
    REQUIRE(closest_face < 1e-9);  // on some face plane, not inside the volume
  }
  // All six faces get samples.
  int face_counts[6] = {0, 0, 0, 0, 0, 0};
  for (const Vec3d& p : pts)
    for (int k = 0; k < 3; ++k) {
      if (std::abs(p[k] - half) < 1e-9) ++face_counts[2 * k];
      if (std::abs(p[k] + half) < 1e-9) ++face_counts[2 * k + 1];
    }
  for (int f = 0; f < 6; ++f) REQUIRE(face_counts[f] > 10);

  const auto again = sample_surface_rays(cube, 400, 77);
  for (size_t i = 0; i < pts.size(); ++i) REQUIRE((pts[i] - again[i]).norm() == 0.0);
  const auto other = sample_surface_rays(cube, 400, 78);
  REQUIRE((pts[0] - other[0]).norm() > 0.0);

  REQUIRE_THROWS_AS(sample_surface_rays(cube, 0, 1), ValidationError);
  TriangleMesh no_faces;
  no_faces.vertices = cube.vertices;
  REQUIRE_THROWS_AS(sample_surface_rays(no_faces, 5, 1), ValidationError);
}

TEST_CASE("knn mean distance matches a hand-worked line") {
  const std::vector<Vec3d> pts = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {4, 0, 0}};
  const auto d = knn_mean_distance(pts, 2);
  REQUIRE(d[0] == Catch::Approx(1.5).margin(1e-12));  // neighbors at 1 and 2
  REQUIRE(d[1] == Catch::Approx(1.0).margin(1e-12));  // neighbors at 0 and 2
  REQUIRE(d[2] == Catch::Approx(1.5).margin(1e-12));
  REQUIRE(d[3] == Catch::Approx(2.5).margin(1e-12));  // neighbors at 2 and 1

  const auto clamped = knn_mean_distance({{0, 0, 0}, {1, 0, 0}, {3, 0, 0}}, 10);  // k -> n-1
  REQUIRE(clamped[0] == Catch::Approx(2.0).margin(1e-12));
  REQUIRE_THROWS_AS(knn_mean_distance({{0, 0, 0}}, 1), ValidationError);
}

TEST_CASE("mesh rasterization fills depth, labels and occlusion correctly") {
  const Camera cam = mesh_cam(64);
  TriangleMesh near_wall, far_wall;
  push_wall(near_wall.vertices, near_wall.triangles, 0.25, 0.3);
  push_wall(far_wall.vertices, far_wall.triangles, 0.25, 0.5);
  const RigidTransform ident;

  SECTION("single wall sets exact depth and part label") {
    const MeshRender r = render_meshes({{&far_wall, ident, 2}}, cam);
    REQUIRE(r.depth.at(31, 31) == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(r.labels.at(31, 31) == 3);  // part_id + 1
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        REQUIRE(r.labels.at(y, x) == 3);  // half extent 0.25 at z 0.5 covers 50 px half-frame
        REQUIRE(r.depth.at(y, x) == Catch::Approx(0.5).margin(1e-12));
      }
  }

  SECTION("nearer geometry wins the z-buffer in either draw order") {
    const MeshRender ab = render_meshes({{&far_wall, ident, 2}, {&near_wall, ident, 0}}, cam);
    const MeshRender ba = render_meshes({{&near_wall, ident, 0}, {&far_wall, ident, 2}}, cam);
    for (const MeshRender* r : {&ab, &ba}) {
      REQUIRE(r->labels.at(31, 31) == 1);
      REQUIRE(r->depth.at(31, 31) == Catch::Approx(0.3).margin(1e-12));
    }
  }

  SECTION("part -1 renders depth but stays label zero") {
    const MeshRender r = render_meshes({{&far_wall, ident, -1}}, cam);
    REQUIRE(r.labels.at(31, 31) == 0);
    REQUIRE(r.depth.at(31, 31) == Catch::Approx(0.5).margin(1e-12));
  }

  SECTION("empty pixels read depth zero") {
    TriangleMesh speck;
    push_wall(speck.vertices, speck.triangles, 0.001, 0.5);  // covers only the center
    const MeshRender r = render_meshes({{&speck, ident, 0}}, cam);
    REQUIRE(r.labels.at(31, 31) == 1);
    REQUIRE(r.depth.at(0, 0) == 0.0);
    REQUIRE(r.labels.at(0, 0) == 0);
  }

  SECTION("near and far planes cull") {
    Camera tight = cam;
    tight.near = 0.4;  // the 0.3 wall sits entirely in front of it
    const MeshRender r = render_meshes({{&near_wall, ident, 0}}, tight);
    REQUIRE(r.labels.at(31, 31) == 0);
    Camera short_range = cam;
    short_range.far = 0.4;
    const MeshRender r2 = render_meshes({{&far_wall, ident, 0}}, short_range);
    REQUIRE(r2.labels.at(31, 31) == 0);
  }

  SECTION("perspective-correct depth on a slanted surface") {
    TriangleMesh slant;
    slant.vertices = {{-0.5, -0.5, 0.4}, {0.5, -0.5, 0.6}, {0.5, 0.5, 0.6}, {-0.5, 0.5, 0.4}};
    slant.triangles = {{0, 1, 2}, {0, 2, 3}};
    const MeshRender r = render_meshes({{&slant, ident, 0}}, cam);
    // The plane satisfies x_cam = 5 z - 2.5; the pixel samples at x + 0.5
    // where projection gives x_cam = u z, so z = 2.5 / (5 - u).
    for (int x : {10, 31, 50}) {
      const double u = (x + 0.5 - cam.cx) / cam.fx;
      const double z = 2.5 / (5.0 - u);
      REQUIRE(r.depth.at(31, x) == Catch::Approx(z).margin(1e-9));
    }
  }

  SECTION("bad inputs throw") {
    Camera bad = cam;
    bad.fx = 0;
    REQUIRE_THROWS_AS(render_meshes({{&far_wall, ident, 0}}, bad), ValidationError);
    REQUIRE_THROWS_AS(render_meshes({{nullptr, ident, 0}}, cam), ValidationError);
  }
}

TEST_CASE("flat shading follows the documented lambert model") {
  const Camera cam = mesh_cam(64);
  TriangleMesh wall;
  push_wall(wall.vertices, wall.triangles, 0.25, 0.5);
  MeshShading shading;
  shading.background = Vec3d(0.1, 0.2, 0.3);
  const MeshRender r = render_meshes({{&wall, RigidTransform{}, 0}}, cam, &shading);

  // Wall normal is +/-z; lighting is two-sided.
  const double lit = 0.65 + 0.35 * std::abs(Vec3d(0, 0, 1).dot(Vec3d(0.3, -0.4, 0.85).normalized()));
  for (int c = 0; c < 3; ++c) REQUIRE(r.color.at(31, 31, c) == Catch::Approx(0.5 * lit).margin(1e-12));

  TriangleMesh speck;
  push_wall(speck.vertices, speck.triangles, 0.001, 0.5);
  const MeshRender r2 = render_meshes({{&speck, RigidTransform{}, 0}}, cam, &shading);
  REQUIRE(r2.color.at(0, 0, 0) == Catch::Approx(0.1).margin(1e-15));
  REQUIRE(r2.color.at(0, 0, 1) == Catch::Approx(0.2).margin(1e-15));
  REQUIRE(r2.color.at(0, 0, 2) == Catch::Approx(0.3).margin(1e-15));

  // Textured shading picks per-part albedo at the triangle centroid. Pixel
  // (x 10, y 40) sits strictly inside the upper-left triangle of the quad.
  ProceduralTexture tex(5);
  shading.texture = &tex;
  const MeshRender rt = render_meshes({{&wall, RigidTransform{}, 1}}, cam, &shading);
  const Vec3d centroid = (wall.vertices[0] + wall.vertices[2] + wall.vertices[3]) / 3.0;
  const Vec3d expect = (tex.albedo(1, centroid) * lit).cwiseMin(1.0).cwiseMax(0.0);
  for (int c = 0; c < 3; ++c) REQUIRE(rt.color.at(40, 10, c) == Catch::Approx(expect[c]).margin(1e-12));
}

TEST_CASE("silhouette views orbit the mesh and mask exactly the hit pixels") {
  const TriangleMesh cube = cube_mesh(0.01);
  const Camera cam = mesh_cam(64);
  const auto views = render_mesh_silhouettes(cube, 20, cam, 123);
  REQUIRE(views.size() == 20);

  const Vec3d center = cube.centroid();
  const double r_mesh = Vec3d(0.01, 0.01, 0.01).norm();
  const double expected_dist = std::max(1.6 * r_mesh, 100.0 * r_mesh / 16.0);
  for (const auto& v : views) {
    const Vec3d center_cam = v.extrinsic.apply(center);
    REQUIRE(center_cam.x() == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(center_cam.y() == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(center_cam.z() == Catch::Approx(expected_dist).margin(1e-12));

    int fg = 0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        const bool on = v.silhouette.at(y, x) != 0;
        REQUIRE(on == (v.depth.at(y, x) > 0.0));
        fg += on;
      }
    REQUIRE(fg > 40);            // the cube subtends ~32 px diameter
    REQUIRE(fg < 64 * 64 / 2);
  }

  const auto same = render_mesh_silhouettes(cube, 20, cam, 123);
  for (int i = 0; i < 20; ++i) {
    REQUIRE((same[i].extrinsic.rotation - views[i].extrinsic.rotation).norm() == 0.0);
    for (int k = 0; k < 64 * 64; ++k)
      REQUIRE(same[i].silhouette.data()[k] == views[i].silhouette.data()[k]);
  }
  const auto other = render_mesh_silhouettes(cube, 20, cam, 124);
  REQUIRE((other[0].extrinsic.rotation - views[0].extrinsic.rotation).norm() > 0.0);

  REQUIRE_THROWS_AS(render_mesh_silhouettes(cube, 0, cam, 1), ValidationError);
  REQUIRE_NOTHROW(render_mesh_silhouettes(cube, 1, cam, 1));
}

TEST_CASE("procedural texture is a deterministic local function") {
  ProceduralTexture tex(42);
  const Vec3d p(0.004, -0.002, 0.013);
  const Vec3d c1 = tex.albedo(0, p);
  const Vec3d c2 = ProceduralTexture(42).albedo(0, p);
  REQUIRE((c1 - c2).norm() == 0.0);
  for (int k = 0; k < 3; ++k) {
    REQUIRE(c1[k] >= 0.0);
    REQUIRE(c1[k] <= 1.0);
  }
  REQUIRE((tex.albedo(0, p) - tex.albedo(1, p)).norm() > 1e-3);   // parts look different
  REQUIRE((tex.albedo(0, p) - tex.albedo(-1, p)).norm() > 1e-3);  // plate has its own slot
  REQUIRE((tex.albedo(0, p) - tex.albedo(0, p + Vec3d(0.004, 0, 0))).norm() > 1e-4);
  REQUIRE((ProceduralTexture(43).albedo(0, p) - c1).norm() > 1e-6);  // seed matters
}
