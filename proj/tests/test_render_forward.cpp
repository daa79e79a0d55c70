#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "artsplat/core/rng.hpp"
#include "artsplat/render/rasterize.hpp"

using namespace artsplat;

namespace {

Camera square_cam(int size) {
  Camera cam;
  cam.fx = cam.fy = 100;
  cam.cx = cam.cy = size / 2.0 - 0.5;  // integer pixel centers line up with the axis
  cam.width = cam.height = size;
  return cam;
}

SplatInput axis_splat(double z, double opacity, const Vec3d& color, int part, int idx) {
  SplatInput s;
  s.mean_cam = Vec3d(0, 0, z);
  s.cov_cam = 1e-6 * Mat3d::Identity();
  s.opacity = opacity;
  s.color = color;
  s.part_id = part;
  s.source_index = idx;
  return s;
}

std::vector<SplatInput> random_scene(Rng& rng, int n, bool distinct_depths) {
  std::vector<SplatInput> splats;
  for (int i = 0; i < n; ++i) {
    SplatInput s;
    s.mean_cam = Vec3d(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(0.5, 1.5));
    if (distinct_depths) s.mean_cam.z() += i * 1e-3;
    const Mat3d a = Mat3d::NullaryExpr([&](int, int) { return rng.normal() * 2e-3; });
    s.cov_cam = a * a.transpose() + 1e-8 * Mat3d::Identity();
    s.opacity = rng.uniform(0.1, 0.95);
    s.color = Vec3d(rng.uniform(), rng.uniform(), rng.uniform());
    s.part_id = rng.uniform_int(0, kNumParts - 1);
    s.source_index = i;
    splats.push_back(s);
  }
  return splats;
}

void require_grids_identical(const GridF& a, const GridF& b) {
  REQUIRE(a.height() == b.height());
  REQUIRE(a.width() == b.width());
  REQUIRE(a.channels() == b.channels());
  for (size_t i = 0; i < a.size(); ++i) REQUIRE(a.data()[i] == b.data()[i]);
}

void require_outputs_identical(const RenderOutput& a, const RenderOutput& b) {
  require_grids_identical(a.color, b.color);
  require_grids_identical(a.alpha, b.alpha);
  require_grids_identical(a.semantics, b.semantics);
  require_grids_identical(a.depth, b.depth);
  require_grids_identical(a.final_t, b.final_t);
}

}  // namespace

TEST_CASE("two on-axis splats composite to hand-computed values") {
  const Camera cam = square_cam(64);
  const int px = 31, py = 31;  // (cx, cy) is this pixel's sample point
  std::vector<SplatInput> splats;
  splats.push_back(axis_splat(1.0, 0.5, Vec3d(1, 0, 0), 0, 0));
  splats.push_back(axis_splat(2.0, 0.5, Vec3d(0, 0, 1), 2, 1));

  RasterParams rp;
  rp.with_tape = false;
  const RenderOutput out = rasterize_splats(splats, cam, rp);

  // Center pixel: a1 = a2 = 0.5 exactly, so c = 0.5*c1 + 0.25*c2, T = 0.25.
  REQUIRE(out.color.at(py, px, 0) == 0.5);
  REQUIRE(out.color.at(py, px, 1) == 0.0);
  REQUIRE(out.color.at(py, px, 2) == 0.25);
  REQUIRE(out.alpha.at(py, px) == 0.75);
  REQUIRE(out.final_t.at(py, px) == 0.25);
  REQUIRE(out.semantics.at(py, px, 0) == 0.5);
  REQUIRE(out.semantics.at(py, px, 1) == 0.0);
  REQUIRE(out.semantics.at(py, px, 2) == 0.25);
  REQUIRE(out.depth_premult.at(py, px) == 0.5 * 1.0 + 0.25 * 2.0);
  REQUIRE(out.depth.at(py, px) == Catch::Approx((0.5 + 0.5) / 0.75).epsilon(1e-12));

  // A far pixel sees only background (zero here).
  REQUIRE(out.color.at(0, 0, 0) == 0.0);
  REQUIRE(out.alpha.at(0, 0) == 0.0);
  REQUIRE(out.final_t.at(0, 0) == 1.0);
  REQUIRE(out.depth.at(0, 0) == 0.0);

  // Nonzero background blends with the remaining transmittance.
  rp.background = Vec3d(0.2, 0.4, 0.6);
  const RenderOutput tinted = rasterize_splats(splats, cam, rp);
  REQUIRE(tinted.color.at(py, px, 0) == Catch::Approx(0.5 + 0.25 * 0.2).epsilon(1e-14));
  REQUIRE(tinted.color.at(py, px, 1) == Catch::Approx(0.25 * 0.4).epsilon(1e-14));
  REQUIRE(tinted.color.at(py, px, 2) == Catch::Approx(0.25 + 0.25 * 0.6).epsilon(1e-14));
  REQUIRE(tinted.color.at(0, 0, 1) == 0.4);  // pure background far away
  // Alpha and depth ignore the background.
  REQUIRE(tinted.alpha.at(py, px) == 0.75);
  REQUIRE(tinted.depth_premult.at(py, px) == out.depth_premult.at(py, px));
}

TEST_CASE("single splat matches a per-pixel analytic evaluation") {
  const Camera cam = square_cam(48);
  SplatInput s;
  s.mean_cam = Vec3d(0.011, -0.007, 0.9);
  Mat3d a;
  a << 3e-3, 1e-3, 0, -5e-4, 2e-3, 1e-3, 0, 8e-4, 4e-3;
  s.cov_cam = a * a.transpose();
  s.opacity = 0.8;
  s.color = Vec3d(0.9, 0.5, 0.1);
  s.part_id = 1;
  s.source_index = 0;

  RasterParams rp;
  rp.sigma_cut = 1e9;   // no footprint cut, every pixel evaluates
  rp.alpha_skip = 0.0;  // and none are skipped
  const RenderOutput out = rasterize_splats({s}, cam, rp);

  const Vec2d mean2d = cam.project(s.mean_cam);
  const Mat23d j = projection_jacobian(cam, s.mean_cam);
  Mat2d cov2d = j * s.cov_cam * j.transpose();
  cov2d(0, 0) += kLowPassPx2;
  cov2d(1, 1) += kLowPassPx2;
  const Mat2d conic = cov2d.inverse();
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      const Vec2d d(x + 0.5 - mean2d.x(), y + 0.5 - mean2d.y());
      const double alpha = std::min(rp.alpha_max, s.opacity * std::exp(-0.5 * d.dot(conic * d)));
      REQUIRE(out.alpha.at(y, x) == Catch::Approx(alpha).margin(1e-12));
      for (int c = 0; c < 3; ++c)
        REQUIRE(out.color.at(y, x, c) == Catch::Approx(alpha * s.color[c]).margin(1e-12));
      REQUIRE(out.final_t.at(y, x) == Catch::Approx(1.0 - alpha).margin(1e-12));
      REQUIRE(out.semantics.at(y, x, 1) == out.alpha.at(y, x));
    }
}

TEST_CASE("semantics channels partition alpha") {
  Rng rng(41);
  const Camera cam = square_cam(40);
  const auto splats = random_scene(rng, 60, false);
  const RenderOutput out = rasterize_splats(splats, cam, RasterParams{});
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      double sum = 0;
      for (int p = 0; p < kNumParts; ++p) sum += out.semantics.at(y, x, p);
      REQUIRE(sum == Catch::Approx(out.alpha.at(y, x)).margin(1e-12));
      REQUIRE(out.alpha.at(y, x) <= 1.0 + 1e-12);
      REQUIRE(out.final_t.at(y, x) >= 0.0);
    }
}

TEST_CASE("storage order cannot change the composite") {
  Rng rng(42);
  const Camera cam = square_cam(40);

  SECTION("distinct depths") {
    auto splats = random_scene(rng, 40, true);
    const RenderOutput ref = rasterize_splats(splats, cam, RasterParams{});
    std::reverse(splats.begin(), splats.end());
    require_outputs_identical(ref, rasterize_splats(splats, cam, RasterParams{}));
    Rng shuffle_rng(7);
    for (int i = int(splats.size()) - 1; i > 0; --i)
      std::swap(splats[i], splats[shuffle_rng.uniform_int(0, i)]);
    require_outputs_identical(ref, rasterize_splats(splats, cam, RasterParams{}));
  }
  SECTION("exact depth ties break on source index") {
    std::vector<SplatInput> splats;
    splats.push_back(axis_splat(1.0, 0.5, Vec3d(1, 0, 0), 0, 0));
    splats.push_back(axis_splat(1.0, 0.5, Vec3d(0, 1, 0), 1, 1));
    const RenderOutput ref = rasterize_splats(splats, cam, RasterParams{});
    std::swap(splats[0], splats[1]);  // storage order flipped, indices kept
    require_outputs_identical(ref, rasterize_splats(splats, cam, RasterParams{}));
    // Red (index 0) still wins the front slot.
    const int px = cam.width / 2 - 1;
    REQUIRE(ref.color.at(px, px, 0) == 0.5);
    REQUIRE(ref.color.at(px, px, 1) == 0.25);
  }
}

TEST_CASE("transmittance floor stops compositing early") {
  const Camera cam = square_cam(32);
  std::vector<SplatInput> wall;
  for (int i = 0; i < 4; ++i) {
    // Broad enough that alpha clamps to 0.99 across the whole frame.
    SplatInput s = axis_splat(0.5 + 0.1 * i, 5.0, Vec3d(1, 1, 1), 0, i);
    s.cov_cam = 0.01 * Mat3d::Identity();
    wall.push_back(s);
  }

  // After three 0.99 splats T = 1e-6 < t_stop, so a fourth splat behind the
  // wall cannot change anything.
  auto with_extra = wall;
  with_extra.push_back(axis_splat(2.0, 0.9, Vec3d(0, 1, 0), 1, 4));
  const RenderOutput a = rasterize_splats(wall, cam, RasterParams{});
  const RenderOutput b = rasterize_splats(with_extra, cam, RasterParams{});
  require_outputs_identical(a, b);
  const int px = cam.width / 2 - 1;
  REQUIRE(a.alpha.at(px, px) == Catch::Approx(1 - std::pow(0.01, 3)).margin(1e-12));

  // With t_stop = 0 the fourth splat does leak through.
  RasterParams deep;
  deep.t_stop = 0.0;
  const RenderOutput c = rasterize_splats(wall, cam, deep);
  const RenderOutput d = rasterize_splats(with_extra, cam, deep);
  REQUIRE(d.semantics.at(px, px, 1) > c.semantics.at(px, px, 1));
}

TEST_CASE("alpha threshold drops faint contributions entirely") {
  const Camera cam = square_cam(32);
  std::vector<SplatInput> base;
  base.push_back(axis_splat(1.0, 0.5, Vec3d(1, 0, 0), 0, 0));
  auto with_faint = base;
  with_faint.push_back(axis_splat(0.8, 0.003, Vec3d(0, 1, 0), 1, 1));  // < 1/255

  const RenderOutput a = rasterize_splats(base, cam, RasterParams{});
  const RenderOutput b = rasterize_splats(with_faint, cam, RasterParams{});
  require_outputs_identical(a, b);

  RasterParams keep;
  keep.alpha_skip = 0.0;
  const RenderOutput c = rasterize_splats(with_faint, cam, keep);
  const int px = cam.width / 2 - 1;
  REQUIRE(c.semantics.at(px, px, 1) > 0.0);
}

TEST_CASE("splats at or behind the near plane are culled") {
  Camera cam = square_cam(32);
  cam.near = 0.05;
  const RenderOutput out =
      rasterize_splats({axis_splat(0.04, 0.9, Vec3d(1, 1, 1), 0, 0)}, cam, RasterParams{});
  REQUIRE(out.visible.empty());
  for (size_t i = 0; i < out.alpha.size(); ++i) REQUIRE(out.alpha.data()[i] == 0.0);
  const RenderOutput in =
      rasterize_splats({axis_splat(0.06, 0.9, Vec3d(1, 1, 1), 0, 0)}, cam, RasterParams{});
  REQUIRE(in.visible.size() == 1);
}

TEST_CASE("optional outputs and the tape can be disabled") {
  Rng rng(43);
  const Camera cam = square_cam(33);  // not a tile multiple
  const auto splats = random_scene(rng, 25, true);
  RasterParams rp;
  rp.with_semantics = false;
  rp.with_depth = false;
  rp.with_tape = false;
  const RenderOutput out = rasterize_splats(splats, cam, rp);
  REQUIRE(out.semantics.empty());
  REQUIRE(out.depth.empty());
  REQUIRE(out.tapes.empty());
  REQUIRE(out.tiles_x == 3);
  REQUIRE(out.tiles_y == 3);

  const RenderOutput full = rasterize_splats(splats, cam, RasterParams{});
  require_grids_identical(out.color, full.color);
  require_grids_identical(out.alpha, full.alpha);
}

TEST_CASE("replaying the tape reproduces the composite bit for bit") {
  Rng rng(44);
  const Camera cam = square_cam(40);
  const auto splats = random_scene(rng, 50, true);
  RasterParams rp;
  rp.background = Vec3d(0.1, 0.2, 0.3);
  const RenderOutput out = rasterize_splats(splats, cam, rp);
  REQUIRE(int(out.tapes.size()) == out.tiles_x * out.tiles_y);

  for (int tile = 0; tile < int(out.tapes.size()); ++tile) {
    const TileTape& tape = out.tapes[tile];
    const auto& list = out.tile_splats[tile];
    const int tx = tile % out.tiles_x, ty = tile / out.tiles_x;
    const int px0 = tx * kTileSize, py0 = ty * kTileSize;
    const int px1 = std::min(cam.width, px0 + kTileSize);
    const int py1 = std::min(cam.height, py0 + kTileSize);
    REQUIRE(int(tape.offsets.size()) == (px1 - px0) * (py1 - py0) + 1);
    int pix = 0;
    for (int y = py0; y < py1; ++y)
      for (int x = px0; x < px1; ++x, ++pix) {
        Vec3d acc = Vec3d::Zero();
        double t_last = 1.0;
        for (int e = tape.offsets[pix]; e < tape.offsets[pix + 1]; ++e) {
          const TapeEntry& ent = tape.entries[e];
          const VisibleSplat& v = out.visible[list[ent.pos]];
          acc += (ent.alpha * ent.transmittance) * v.proj.color;
          t_last = ent.transmittance * (1.0 - ent.alpha);
        }
        for (int c = 0; c < 3; ++c)
          REQUIRE(out.color.at(y, x, c) == acc[c] + t_last * rp.background[c]);
        // Transmittances on the tape are strictly decreasing.
        for (int e = tape.offsets[pix] + 1; e < tape.offsets[pix + 1]; ++e)
          REQUIRE(tape.entries[e].transmittance < tape.entries[e - 1].transmittance);
      }
  }
}

TEST_CASE("tile thread count never changes the output") {
  Rng rng(45);
  const Camera cam = square_cam(50);
  const auto splats = random_scene(rng, 80, true);
  RasterParams rp1;
  RasterParams rp4 = rp1;
  rp4.threads = 4;
  require_outputs_identical(rasterize_splats(splats, cam, rp1),
                            rasterize_splats(splats, cam, rp4));
}

TEST_CASE("rasterize validates the camera") {
  Camera bad;
  REQUIRE_THROWS_AS(rasterize_splats({}, bad, RasterParams{}), ValidationError);
}

TEST_CASE("argmax labels switch to background below half coverage") {
  const Camera cam = square_cam(32);
  std::vector<SplatInput> splats;
  splats.push_back(axis_splat(1.0, 0.6, Vec3d(1, 0, 0), 2, 0));
  const RenderOutput out = rasterize_splats(splats, cam, RasterParams{});
  const GridU8 labels = out.semantics_argmax();
  const int px = cam.width / 2 - 1;
  REQUIRE(labels.at(px, px) == 3);  // part 2 -> label 3
  REQUIRE(labels.at(0, 0) == 0);

  splats[0].opacity = 0.4;  // below the 0.5 coverage bar
  const GridU8 faint = rasterize_splats(splats, cam, RasterParams{}).semantics_argmax();
  REQUIRE(faint.at(px, px) == 0);
}
