#include <catch2/catch_amalgamated.hpp>

#include "artsplat/eval/synthetic.hpp"
#include "artsplat/pretrain/pretrain.hpp"

#include <numeric>

using namespace artsplat;

namespace {

TriangleMesh box_mesh(const Vec3d& half) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back(
        {half.x() * (i & 1 ? 1 : -1), half.y() * (i & 2 ? 1 : -1), half.z() * (i & 4 ? 1 : -1)});
  const int quads[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1},
                           {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
  for (const auto& q : quads) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  return m;
}

Camera small_cam() {
  Camera c;
  c.fx = c.fy = 90;
  c.cx = 23.5;
  c.cy = 23.5;
  c.width = c.height = 48;
  return c;
}

double silhouette_iou(const std::vector<GaussianPrimitive>& prims, const SilhouetteView& view,
                      const OptimConfig& cfg) {
  RasterParams params = RasterParams::from(cfg);
  params.with_semantics = false;
  params.with_depth = false;
  params.with_tape = false;
  const RenderOutput out = rasterize_part(prims, view.extrinsic, view.camera, params);
  int inter = 0, uni = 0;
  for (int y = 0; y < view.camera.height; ++y)
    for (int x = 0; x < view.camera.width; ++x) {
      const bool pred = out.alpha.at(y, x) >= 0.5;
      const bool truth = view.silhouette.at(y, x) != 0;
      inter += pred && truth;
      uni += pred || truth;
    }
  return uni == 0 ? 1.0 : double(inter) / uni;
}

}  // namespace

TEST_CASE("initial primitives sit on the samples with knn-derived scales") {
  const std::vector<Vec3d> pts = {{0, 0, 0}, {0.001, 0, 0}, {0, 0.002, 0}, {0.004, 0, 0.001}};
  const auto prims = init_primitives(pts, 2);
  const auto nn = knn_mean_distance(pts, 3);
  REQUIRE(prims.size() == pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    const auto& g = prims[i];
    REQUIRE((g.mean.cast<double>() - pts[i]).norm() < 1e-7);
    REQUIRE(g.rotation == Vec4f(1, 0, 0, 0));
    REQUIRE(g.opacity_logit == 0.f);
    REQUIRE(g.color == Vec3f(0.5f, 0.5f, 0.5f));
    REQUIRE(g.part_id == 2);
    for (int k = 0; k < 3; ++k) REQUIRE(g.log_scale[k] == float(std::log(nn[i])));
  }
  REQUIRE_THROWS_AS(init_primitives({{0, 0, 0}}, 0), ValidationError);
}

TEST_CASE("silhouette l1 loss and gradient match hand values") {
  GridF alpha(2, 2, 1);
  alpha.at(0, 0) = 0.3;
  alpha.at(0, 1) = 0.8;
  alpha.at(1, 0) = 1.0;
  alpha.at(1, 1) = 0.0;
  GridU8 sil(2, 2, 1);
  sil.at(0, 0) = 1;
  sil.at(1, 0) = 1;
  GridF d_alpha;
  const double loss = silhouette_l1(alpha, sil, d_alpha);
  REQUIRE(loss == Catch::Approx(1.5).margin(1e-15));
  REQUIRE(d_alpha.at(0, 0) == -1.0);
  REQUIRE(d_alpha.at(0, 1) == 1.0);
  REQUIRE(d_alpha.at(1, 0) == 0.0);
  REQUIRE(d_alpha.at(1, 1) == 0.0);

  GridU8 wrong(3, 2, 1);
  REQUIRE_THROWS_AS(silhouette_l1(alpha, wrong, d_alpha), ValidationError);
}

TEST_CASE("part pretraining improves a held-out silhouette") {
  const TriangleMesh mesh = box_mesh({0.012, 0.007, 0.018});
  const Camera cam = small_cam();
  const auto all_views = render_mesh_silhouettes(mesh, 9, cam, 31);
  const std::vector<SilhouetteView> train(all_views.begin(), all_views.end() - 1);
  const SilhouetteView& heldout = all_views.back();

  const auto points = sample_surface_rays(mesh, 150, 5);
  OptimConfig cfg;
  const auto fit = pretrain_part(points, train, 1, 220, cfg, 99);
  REQUIRE(int(fit.loss_history.size()) == 220);
  REQUIRE(fit.primitives.size() == points.size());
  for (const auto& g : fit.primitives) REQUIRE(g.part_id == 1);

  const double first = std::accumulate(fit.loss_history.begin(), fit.loss_history.begin() + 10, 0.0);
  const double last = std::accumulate(fit.loss_history.end() - 10, fit.loss_history.end(), 0.0);
  REQUIRE(last < 0.6 * first);

  const double iou_init = silhouette_iou(init_primitives(points, 1), heldout, cfg);
  const double iou_fit = silhouette_iou(fit.primitives, heldout, cfg);
  REQUIRE(iou_fit > 0.8);
  REQUIRE(iou_fit > iou_init - 0.02);  // fitting never wrecks the seeded cloud
}

TEST_CASE("pretraining is deterministic and validates its inputs") {
  const TriangleMesh mesh = box_mesh({0.01, 0.01, 0.01});
  const Camera cam = small_cam();
  const auto views = render_mesh_silhouettes(mesh, 4, cam, 7);
  const auto points = sample_surface_rays(mesh, 60, 3);
  OptimConfig cfg;
  const auto a = pretrain_part(points, views, 0, 25, cfg, 5);
  const auto b = pretrain_part(points, views, 0, 25, cfg, 5);
  REQUIRE(a.loss_history == b.loss_history);
  for (size_t i = 0; i < a.primitives.size(); ++i) {
    REQUIRE(a.primitives[i].mean == b.primitives[i].mean);
    REQUIRE(a.primitives[i].rotation == b.primitives[i].rotation);
    REQUIRE(a.primitives[i].log_scale == b.primitives[i].log_scale);
    REQUIRE(a.primitives[i].opacity_logit == b.primitives[i].opacity_logit);
    REQUIRE(a.primitives[i].color == b.primitives[i].color);
  }
  const auto c = pretrain_part(points, views, 0, 25, cfg, 6);
  bool any_diff = false;
  for (size_t i = 0; i < a.primitives.size(); ++i)
    any_diff = any_diff || a.primitives[i].mean != c.primitives[i].mean;
  REQUIRE(any_diff);

  REQUIRE_THROWS_AS(pretrain_part(points, views, 0, 0, cfg, 1), ValidationError);
  REQUIRE_THROWS_AS(pretrain_part(points, {}, 0, 10, cfg, 1), ValidationError);
}

TEST_CASE("assembly retags parts and passes attributes through") {
  const KinematicChain chain = make_synthetic_chain(SyntheticSpec{});
  std::array<std::vector<GaussianPrimitive>, kNumParts> fits;
  Rng rng(17);
  for (int p = 0; p < kNumParts; ++p) {
    for (int i = 0; i < 3 + p; ++i) {
      GaussianPrimitive g;
      for (int k = 0; k < 3; ++k) {
        g.mean[k] = float(rng.uniform(-0.01, 0.01));
        g.log_scale[k] = float(rng.uniform(-7, -5));
        g.color[k] = float(rng.uniform(0, 1));
      }
      g.rotation = Vec4f(1, 0, 0, 0);
      g.opacity_logit = float(rng.uniform(-1, 1));
      g.part_id = 99;  // deliberately wrong; assembly must fix it
      fits[p].push_back(g);
    }
  }
  const ArticulatedGaussianModel model = assemble_instrument(fits, chain);
  for (int p = 0; p < kNumParts; ++p) {
    const auto& prims = model.primitives(p);
    REQUIRE(prims.size() == fits[p].size());
    for (size_t i = 0; i < prims.size(); ++i) {
      REQUIRE(prims[i].part_id == p);
      REQUIRE(prims[i].mean == fits[p][i].mean);
      REQUIRE(prims[i].rotation == fits[p][i].rotation);
      REQUIRE(prims[i].log_scale == fits[p][i].log_scale);
      REQUIRE(prims[i].opacity_logit == fits[p][i].opacity_logit);
      REQUIRE(prims[i].color == fits[p][i].color);
    }
  }
  REQUIRE(serialize_chain(model.chain()) == serialize_chain(chain));
}
