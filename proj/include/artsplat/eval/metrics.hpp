#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "artsplat/core/common.hpp"
#include "artsplat/core/grid.hpp"

namespace artsplat {

inline constexpr double kUndefinedMetric =
    std::numeric_limits<double>::quiet_NaN();

// PSNR on [0,1] images; identical inputs return +inf.
inline double psnr(const GridF& a, const GridF& b) {
  if (!a.same_shape(b)) throw ValidationError("psnr: shape mismatch");
  if (a.size() == 0) throw ValidationError("psnr: empty images");
  double mse = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    mse += d * d;
  }
  mse /= double(a.size());
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace detail {

inline std::vector<double> gaussian_window_11() {
  // 11 taps, sigma 1.5, normalized.
  std::vector<double> w(11);
  double sum = 0;
  for (int i = 0; i < 11; ++i) {
    const double d = i - 5;
    w[i] = std::exp(-0.5 * d * d / (1.5 * 1.5));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace detail

// SSIM with an 11x11 Gaussian window (sigma 1.5), C1=0.01^2, C2=0.03^2,
// normalized weights without sample-covariance correction, averaged over the
// fully supported interior and then over channels.
inline double ssim(const GridF& a, const GridF& b) {
  if (!a.same_shape(b)) throw ValidationError("ssim: shape mismatch");
  const int h = a.height(), w = a.width(), ch = a.channels();
  const int r = 5;
  if (h < 2 * r + 1 || w < 2 * r + 1)
    throw ValidationError("ssim: images smaller than the 11x11 window");
  static const std::vector<double> win = detail::gaussian_window_11();
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

  double chan_sum = 0;
  for (int c = 0; c < ch; ++c) {
    // Separable pass: per row position, horizontally filtered x, y, x^2, y^2, xy.
    GridF fx(h, w, 5);
    for (int y = 0; y < h; ++y) {
      for (int x = r; x < w - r; ++x) {
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (int k = -r; k <= r; ++k) {
          const double wa = win[k + r];
          const double va = a.at(y, x + k, c), vb = b.at(y, x + k, c);
          sx += wa * va;
          sy += wa * vb;
          sxx += wa * va * va;
          syy += wa * vb * vb;
          sxy += wa * va * vb;
        }
        fx.at(y, x, 0) = sx;
        fx.at(y, x, 1) = sy;
        fx.at(y, x, 2) = sxx;
        fx.at(y, x, 3) = syy;
        fx.at(y, x, 4) = sxy;
      }
    }
    double acc = 0;
    int count = 0;
    for (int y = r; y < h - r; ++y) {
      for (int x = r; x < w - r; ++x) {
        double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
        for (int k = -r; k <= r; ++k) {
          const double wa = win[k + r];
          mx += wa * fx.at(y + k, x, 0);
          my += wa * fx.at(y + k, x, 1);
          mxx += wa * fx.at(y + k, x, 2);
          myy += wa * fx.at(y + k, x, 3);
          mxy += wa * fx.at(y + k, x, 4);
        }
        const double vx = mxx - mx * mx;
        const double vy = myy - my * my;
        const double cxy = mxy - mx * my;
        const double num = (2 * mx * my + c1) * (2 * cxy + c2);
        const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
        acc += num / den;
        ++count;
      }
    }
    chan_sum += acc / count;
  }
  return chan_sum / ch;
}

// RMSE over pixels where ref is finite and positive; mask (if given) further
// restricts to nonzero entries. Empty valid set returns the NaN sentinel.
inline double depth_rmse(const GridF& pred, const GridF& ref,
                         const GridU8* mask = nullptr) {
  if (!pred.same_shape(ref)) throw ValidationError("depth_rmse: shape mismatch");
  if (mask && (mask->height() != ref.height() || mask->width() != ref.width()))
    throw ValidationError("depth_rmse: mask shape mismatch");
  double acc = 0;
  long n = 0;
  for (int y = 0; y < ref.height(); ++y) {
    for (int x = 0; x < ref.width(); ++x) {
      const double zr = ref.at(y, x, 0);
      if (!std::isfinite(zr) || zr <= 0) continue;
      if (mask && mask->at(y, x, 0) == 0) continue;
      const double d = pred.at(y, x, 0) - zr;
      acc += d * d;
      ++n;
    }
  }
  if (n == 0) return kUndefinedMetric;
  return std::sqrt(acc / n);
}

// Dice per part label (1..P) on argmax label maps; a part absent from both
// maps scores the NaN sentinel.
inline std::vector<double> dice_per_part(const GridU8& pred, const GridU8& gt,
                                         int num_parts) {
  if (!pred.same_shape(gt)) throw ValidationError("dice_per_part: shape mismatch");
  std::vector<long> inter(num_parts, 0), pa(num_parts, 0), ga(num_parts, 0);
  for (size_t i = 0; i < pred.size(); ++i) {
    const int p = pred.data()[i], g = gt.data()[i];
    if (p >= 1 && p <= num_parts) ++pa[p - 1];
    if (g >= 1 && g <= num_parts) ++ga[g - 1];
    if (p == g && p >= 1 && p <= num_parts) ++inter[p - 1];
  }
  std::vector<double> dice(num_parts);
  for (int k = 0; k < num_parts; ++k) {
    const long denom = pa[k] + ga[k];
    dice[k] = denom == 0 ? kUndefinedMetric : 2.0 * inter[k] / double(denom);
  }
  return dice;
}

inline double mean_defined(const std::vector<double>& v) {
  double acc = 0;
  int n = 0;
  for (double x : v)
    if (std::isfinite(x)) {
      acc += x;
      ++n;
    }
  return n == 0 ? kUndefinedMetric : acc / n;
}

// Intersection-over-union of two binary masks (nonzero = foreground).
inline double mask_iou(const GridU8& a, const GridU8& b) {
  if (!a.same_shape(b)) throw ValidationError("mask_iou: shape mismatch");
  long inter = 0, uni = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const bool fa = a.data()[i] != 0, fb = b.data()[i] != 0;
    inter += fa && fb;
    uni += fa || fb;
  }
  return uni == 0 ? kUndefinedMetric : double(inter) / double(uni);
}

struct KeypointMetrics {
  double rmse_px = 0;
  std::vector<double> pck;  // aligned with thresholds
};

// RMSE over all matched keypoints plus PCK at the given pixel thresholds
// (default 2.5 and 5).
inline KeypointMetrics keypoint_metrics(
    const std::vector<std::vector<Vec2d>>& pred,
    const std::vector<std::vector<Vec2d>>& gt,
    const std::vector<double>& thresholds = {2.5, 5.0}) {
  if (pred.size() != gt.size())
    throw ValidationError("keypoint_metrics: frame count mismatch");
  double acc = 0;
  long n = 0;
  std::vector<long> within(thresholds.size(), 0);
  for (size_t f = 0; f < pred.size(); ++f) {
    if (pred[f].size() != gt[f].size())
      throw ValidationError("keypoint_metrics: cardinality mismatch at frame " +
                            std::to_string(f));
    for (size_t k = 0; k < pred[f].size(); ++k) {
      const double d = (pred[f][k] - gt[f][k]).norm();
      acc += d * d;
      ++n;
      for (size_t t = 0; t < thresholds.size(); ++t)
        if (d <= thresholds[t]) ++within[t];
    }
  }
  if (n == 0) throw ValidationError("keypoint_metrics: no keypoints");
  KeypointMetrics out;
  out.rmse_px = std::sqrt(acc / n);
  for (long w : within) out.pck.push_back(double(w) / double(n));
  return out;
}

struct MetricReport {
  double psnr_db = 0;
  double ssim_val = 0;
  double depth_rmse_full = kUndefinedMetric;
  double depth_rmse_masked = kUndefinedMetric;
  std::vector<double> dice;  // per part
  double keypoint_rmse_px = kUndefinedMetric;
  std::vector<double> pck;
};

}  // namespace artsplat
