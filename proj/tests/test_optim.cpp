#include <catch2/catch_amalgamated.hpp>

#include "artsplat/core/rng.hpp"
#include "artsplat/eval/synthetic.hpp"
#include "artsplat/optim/adam.hpp"

using namespace artsplat;

TEST_CASE("adam first step reduces to a signed learning-rate step") {
  const double g = -3.7, lr = 0.01;
  double m = 0, v = 0;
  const double upd = detail::adam_update(m, v, g, lr, 1);
  // Bias correction makes mhat = g and vhat = g^2 exactly on step one.
  REQUIRE(upd == lr * g / (std::abs(g) + kAdamEps));
  REQUIRE(m == (1.0 - kAdamBeta1) * g);
  REQUIRE(v == (1.0 - kAdamBeta2) * g * g);
}

TEST_CASE("adam trajectory matches an independent reimplementation") {
  Rng rng(61);
  double m = 0, v = 0, x = 1.0;
  double m2 = 0, v2 = 0, x2 = 1.0;
  for (int t = 1; t <= 50; ++t) {
    const double g = rng.normal();
    x -= detail::adam_update(m, v, g, 0.05, t);
    // Textbook update, written independently.
    m2 = 0.9 * m2 + 0.1 * g;
    v2 = 0.999 * v2 + 0.001 * g * g;
    const double mhat = m2 / (1.0 - std::pow(0.9, t));
    const double vhat = v2 / (1.0 - std::pow(0.999, t));
    x2 -= 0.05 * mhat / (std::sqrt(vhat) + 1e-8);
    REQUIRE(x == Catch::Approx(x2).margin(1e-12));
  }
}

TEST_CASE("cosine decay covers its endpoints and decreases monotonically") {
  REQUIRE(cosine_decay(0, 100) == 1.0);
  REQUIRE(cosine_decay(50, 100) == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(cosine_decay(100, 100) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(cosine_decay(250, 100) == Catch::Approx(0.0).margin(1e-15));  // clamps past the end
  REQUIRE(cosine_decay(17, 0) == 1.0);
  REQUIRE(cosine_decay(17, -3) == 1.0);
  for (int t = 1; t <= 100; ++t) REQUIRE(cosine_decay(t, 100) < cosine_decay(t - 1, 100));
}

TEST_CASE("pose optimizer steps theta and xi in their own charts") {
  const KinematicChain chain = make_synthetic_chain(SyntheticSpec{});
  OptimConfig cfg;
  PoseOptimizer opt(cfg);
  PoseSet q;
  q.theta = {0.2, -0.1, 0.3};
  q.xi << 0.01, -0.02, 0.2, 0.1, -0.05, 0.08;

  SECTION("theta-only gradient leaves xi fixed") {
    Vec9d grad = Vec9d::Zero();
    grad[1] = 2.5;
    const PoseSet next = opt.step(chain, q, grad);
    REQUIRE(next.theta[0] == q.theta[0]);
    REQUIRE(next.theta[1] ==
            Catch::Approx(q.theta[1] - cfg.eta_theta * 2.5 / (2.5 + kAdamEps)).margin(1e-15));
    REQUIRE(next.theta[2] == q.theta[2]);
    REQUIRE((next.xi - q.xi).norm() < 1e-12);
  }

  SECTION("xi gradient composes a left increment") {
    Vec9d grad = Vec9d::Zero();
    grad[3] = 1.0;  // translation x
    const PoseSet next = opt.step(chain, q, grad);
    const double step = cfg.eta_xi_trans * 1.0 / (1.0 + kAdamEps);
    Vec6d delta = Vec6d::Zero();
    delta[0] = -step;
    const Vec6d expect = log_se3(exp_se3(delta).compose(exp_se3(q.xi)));
    REQUIRE((next.xi - expect).norm() < 1e-14);
    for (int j = 0; j < 3; ++j) REQUIRE(next.theta[j] == q.theta[j]);
  }

  SECTION("theta clamps to the chain limits") {
    PoseSet at_limit = q;
    at_limit.theta = {0.0, 0.0, 0.005};  // joint 3 range is [0, pi/2]
    Vec9d grad = Vec9d::Zero();
    grad[2] = 10.0;  // a ~0.01 step pushes theta3 below zero
    const PoseSet next = opt.step(chain, at_limit, grad);
    REQUIRE(next.theta[2] == 0.0);
  }

  SECTION("non-finite gradients are rejected") {
    Vec9d grad = Vec9d::Zero();
    grad[4] = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(opt.step(chain, q, grad), ValidationError);
  }

  SECTION("reset restores the first-step behavior") {
    Vec9d grad = Vec9d::Zero();
    grad[0] = 1.0;
    const PoseSet a = opt.step(chain, q, grad);
    opt.step(chain, a, grad);
    opt.reset();
    const PoseSet b = opt.step(chain, q, grad);
    REQUIRE(b.theta[0] == a.theta[0]);
    REQUIRE((b.xi - a.xi).norm() == 0.0);
  }

  SECTION("descends a quadratic in theta") {
    PoseOptimizer fresh(cfg);
    std::array<double, 3> target{0.4, -0.3, 0.7};
    PoseSet cur = q;
    for (int it = 0; it < 600; ++it) {
      Vec9d grad = Vec9d::Zero();
      for (int j = 0; j < 3; ++j) grad[j] = 2.0 * (cur.theta[j] - target[j]);
      cur = fresh.step(chain, cur, grad, cosine_decay(it, 600));
    }
    for (int j = 0; j < 3; ++j) REQUIRE(cur.theta[j] == Catch::Approx(target[j]).margin(5e-3));
  }
}

TEST_CASE("gaussian optimizer updates, clamps and renormalizes attributes") {
  OptimConfig cfg;
  std::vector<GaussianPrimitive> prims(2);
  for (auto& g : prims) {
    g.mean = {0.01f, -0.02f, 0.03f};
    g.rotation = {1, 0, 0, 0};
    g.log_scale = {-5, -5, -5};
    g.opacity_logit = 0.4f;
    g.color = {0.5f, 0.999f, 0.001f};
  }
  GaussianOptimizer opt(2, cfg);

  std::vector<Vec3d> d_mean(2, Vec3d(1, 0, 0));
  std::vector<Vec4d> d_rot(2, Vec4d(0, 0.5, 0, 0));
  std::vector<Vec3d> d_ls(2, Vec3d(0, -2, 0));
  std::vector<double> d_op(2, 3.0);
  std::vector<Vec3d> d_col(2, Vec3d(0, -1, 1));  // pushes g past both ends
  opt.step(prims, d_mean, d_rot, d_ls, d_op, d_col);

  for (const auto& g : prims) {
    REQUIRE(g.mean[0] == Catch::Approx(0.01 - cfg.eta_mean).epsilon(1e-5));
    REQUIRE(g.mean[1] == -0.02f);
    REQUIRE(g.log_scale[1] == Catch::Approx(-5 + cfg.eta_log_scale).epsilon(1e-5));
    REQUIRE(g.opacity_logit == Catch::Approx(0.4 - cfg.eta_opacity).epsilon(1e-5));
    REQUIRE(g.color[0] == 0.5f);
    REQUIRE(g.color[1] == 1.0f);  // clamped at the top
    REQUIRE(g.color[2] == 0.0f);  // clamped at the bottom
    REQUIRE(std::abs(g.rotation.cast<double>().norm() - 1.0) < 1e-6);
    REQUIRE(g.rotation[0] >= 0.f);
    REQUIRE(g.rotation[1] < 0.f);  // moved against the positive x gradient
  }

  std::vector<GaussianPrimitive> wrong(3);
  REQUIRE_THROWS_AS(opt.step(wrong, d_mean, d_rot, d_ls, d_op, d_col), ValidationError);
}

TEST_CASE("early stop fires only on stalled windows") {
  SECTION("steady improvement never fires") {
    EarlyStop es(3, 1e-3);
    REQUIRE_FALSE(es.update(1.0));  // reference
    double loss = 1.0;
    for (int i = 0; i < 12; ++i) {
      loss -= 0.05;
      REQUIRE_FALSE(es.update(loss));
    }
  }
  SECTION("plateau fires after one full window") {
    EarlyStop es(4, 1e-3);
    REQUIRE_FALSE(es.update(1.0));
    REQUIRE_FALSE(es.update(0.5));  // big improvement, window 1 of 4
    REQUIRE_FALSE(es.update(0.5));
    REQUIRE_FALSE(es.update(0.5));
    REQUIRE_FALSE(es.update(0.5));  // window closes: 1.0 -> 0.5 improved, no fire
    REQUIRE_FALSE(es.update(0.5));
    REQUIRE_FALSE(es.update(0.4999));
    REQUIRE_FALSE(es.update(0.5));
    REQUIRE(es.update(0.5));  // window closes: 0.5 -> 0.4999 is below threshold
  }
  SECTION("tiny relative improvement counts as stalled") {
    EarlyStop es(2, 1e-3);
    es.update(100.0);
    REQUIRE_FALSE(es.update(99.999));
    REQUIRE(es.update(99.998));  // 0.002 absolute is 2e-5 relative
  }
  SECTION("window below one is clamped") {
    EarlyStop es(0, 1e-3);
    es.update(1.0);
    REQUIRE(es.update(1.0));  // every update closes a window
  }
}
