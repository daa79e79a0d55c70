#pragma once

#include <artsplat/core/chain.hpp>
#include <artsplat/core/model.hpp>
#include <artsplat/core/types.hpp>
#include <artsplat/kin/se3.hpp>
#include <artsplat/render/backward.hpp>

#include <limits>
#include <vector>

namespace artsplat {

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

inline double cosine_decay(int t, int total) {
  if (total <= 0) return 1.0;
  const double frac = std::min(1.0, double(t) / double(total));
  return 0.5 * (1.0 + std::cos(kPi * frac));
}

namespace detail {

// One Adam step for a single scalar; m and v are the persistent moments.
inline double adam_update(double& m, double& v, double g, double lr, int t) {
  m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
  v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
  const double mhat = m / (1.0 - std::pow(kAdamBeta1, t));
  const double vhat = v / (1.0 - std::pow(kAdamBeta2, t));
  return lr * mhat / (std::sqrt(vhat) + kAdamEps);
}

}  // namespace detail

// Adam over the 9 pose parameters. Joint angles update in place (and clamp
// to limits); the twist updates by composing a left increment onto the
// current transform, so the moments live in the local tangent frame.
class PoseOptimizer {
 public:
  explicit PoseOptimizer(const OptimConfig& cfg) : cfg_(cfg) {}

  PoseSet step(const KinematicChain& chain, const PoseSet& q, const Vec9d& grad,
               double lr_scale = 1.0) {
    if (!grad.allFinite()) throw ValidationError("pose step: non-finite gradient");
    ++t_;
    Vec9d upd;
    for (int i = 0; i < 9; ++i)
      upd[i] = detail::adam_update(m_[i], v_[i], grad[i], lr_scale * lr(i), t_);
    PoseSet next = q;
    for (int j = 0; j < 3; ++j) next.theta[j] -= upd[j];
    next.theta = chain.clamp_theta(next.theta);
    Vec6d delta = -upd.tail<6>();
    next.xi = log_se3(exp_se3(delta).compose(exp_se3(q.xi)));
    return next;
  }

  void reset() {
    t_ = 0;
    m_.setZero();
    v_.setZero();
  }

 private:
  double lr(int i) const {
    if (i < 3) return cfg_.eta_theta;
    if (i < 6) return cfg_.eta_xi_trans;
    return cfg_.eta_xi_rot;
  }
  OptimConfig cfg_;
  int t_ = 0;
  Vec9d m_ = Vec9d::Zero();
  Vec9d v_ = Vec9d::Zero();
};

// Adam over all attributes of a primitive array. Quaternions are
// renormalized (and sign-canonicalized) after each step; colors clamp back
// into [0,1].
class GaussianOptimizer {
 public:
  explicit GaussianOptimizer(int n, const OptimConfig& cfg) : cfg_(cfg) {
    m_.assign(n, Slot{});
    v_.assign(n, Slot{});
  }

  void step(std::vector<GaussianPrimitive>& prims, const std::vector<Vec3d>& d_mean,
            const std::vector<Vec4d>& d_rotation, const std::vector<Vec3d>& d_log_scale,
            const std::vector<double>& d_opacity_logit, const std::vector<Vec3d>& d_color,
            double lr_scale = 1.0) {
    if (prims.size() != m_.size()) throw ValidationError("gaussian step: size mismatch");
    ++t_;
    for (size_t i = 0; i < prims.size(); ++i) {
      GaussianPrimitive& g = prims[i];
      Slot& m = m_[i];
      Slot& v = v_[i];
      for (int k = 0; k < 3; ++k) {
        g.mean[k] -= float(detail::adam_update(m.mean[k], v.mean[k], d_mean[i][k],
                                               lr_scale * cfg_.eta_mean, t_));
        g.log_scale[k] -= float(detail::adam_update(m.log_scale[k], v.log_scale[k],
                                                    d_log_scale[i][k],
                                                    lr_scale * cfg_.eta_log_scale, t_));
        g.color[k] -= float(detail::adam_update(m.color[k], v.color[k], d_color[i][k],
                                                lr_scale * cfg_.eta_color, t_));
        g.color[k] = std::clamp(g.color[k], 0.f, 1.f);
      }
      for (int k = 0; k < 4; ++k)
        g.rotation[k] -= float(detail::adam_update(m.rotation[k], v.rotation[k],
                                                   d_rotation[i][k],
                                                   lr_scale * cfg_.eta_rotation, t_));
      g.rotation = quat_canonical(g.rotation.cast<double>()).cast<float>();
      g.opacity_logit -= float(detail::adam_update(m.opacity, v.opacity, d_opacity_logit[i],
                                                   lr_scale * cfg_.eta_opacity, t_));
    }
  }

  void step(std::vector<GaussianPrimitive>& prims, const PartGrads& g, double lr_scale = 1.0) {
    step(prims, g.d_mean, g.d_rotation, g.d_log_scale, g.d_opacity_logit, g.d_color, lr_scale);
  }
  void step(std::vector<GaussianPrimitive>& prims, const GradientBundle& g,
            double lr_scale = 1.0) {
    step(prims, g.d_mean, g.d_rotation, g.d_log_scale, g.d_opacity_logit, g.d_color, lr_scale);
  }

 private:
  struct Slot {
    Vec3d mean = Vec3d::Zero();
    Vec4d rotation = Vec4d::Zero();
    Vec3d log_scale = Vec3d::Zero();
    double opacity = 0;
    Vec3d color = Vec3d::Zero();
  };
  OptimConfig cfg_;
  int t_ = 0;
  std::vector<Slot> m_, v_;
};

// Windowed relative-improvement early stop. The first update sets the
// reference; the criterion fires when a full window passes without the best
// loss improving on the reference by at least rel_threshold (relatively).
class EarlyStop {
 public:
  EarlyStop(int window, double rel_threshold)
      : window_(std::max(1, window)), rel_(rel_threshold) {}

  bool update(double loss) {
    if (!have_ref_) {
      have_ref_ = true;
      ref_ = loss;
      best_ = loss;
      return false;
    }
    best_ = std::min(best_, loss);
    if (++count_ < window_) return false;
    const bool fire = ref_ - best_ < rel_ * std::max(1e-12, std::abs(ref_));
    ref_ = best_;
    count_ = 0;
    return fire;
  }

 private:
  int window_, count_ = 0;
  double rel_;
  bool have_ref_ = false;
  double ref_ = 0, best_ = 0;
};

}  // namespace artsplat
