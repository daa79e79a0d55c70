#pragma once

#include <artsplat/core/chain.hpp>
#include <artsplat/core/common.hpp>

#include <array>
#include <cstdint>

namespace artsplat {

// Seeded 3D value-noise texture with per-part base colors. Purely a function
// of (part, local point), so the appearance a fitted model should learn is
// pose independent.
class ProceduralTexture {
 public:
  explicit ProceduralTexture(uint64_t seed, double feature_scale = 150.0)
      : seed_(seed), scale_(feature_scale) {
    const std::array<Vec3d, kNumParts + 1> defaults = {
        Vec3d(0.55, 0.57, 0.62),  // shaft: steel gray
        Vec3d(0.72, 0.66, 0.35),  // wrist: brass
        Vec3d(0.35, 0.50, 0.72),  // right gripper
        Vec3d(0.70, 0.40, 0.38),  // left tooltip
        Vec3d(0.45, 0.36, 0.30),  // background plate
    };
    base_ = defaults;
  }

  // part -1 addresses the background plate.
  Vec3d albedo(int part, const Vec3d& local_point) const {
    const int slot = part < 0 ? kNumParts : part;
    const Vec3d p = local_point * scale_;
    const double n1 = value_noise(p, uint64_t(slot) * 0x9e3779b97f4a7c15ULL + 1);
    const double n2 = value_noise(p * 2.7, uint64_t(slot) * 0x9e3779b97f4a7c15ULL + 2);
    const double m = 0.6 + 0.3 * n1 + 0.1 * n2;
    Vec3d c = base_[slot] * m;
    // A secondary hue ripple keeps neighboring surface points distinguishable.
    c.x() = std::clamp(c.x() + 0.08 * (n2 - 0.5), 0.0, 1.0);
    c.y() = std::clamp(c.y(), 0.0, 1.0);
    c.z() = std::clamp(c.z() + 0.08 * (0.5 - n1), 0.0, 1.0);
    return c;
  }

 private:
  static double fade(double t) { return t * t * (3.0 - 2.0 * t); }

  double lattice(int64_t x, int64_t y, int64_t z, uint64_t salt) const {
    uint64_t h = seed_ ^ salt;
    h ^= uint64_t(x) * 0xff51afd7ed558ccdULL;
    h ^= uint64_t(y) * 0xc4ceb9fe1a85ec53ULL;
    h ^= uint64_t(z) * 0x9e3779b97f4a7c15ULL;
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return double(h >> 11) * 0x1.0p-53;
  }

  double value_noise(const Vec3d& p, uint64_t salt) const {
    const int64_t x0 = int64_t(std::floor(p.x())), y0 = int64_t(std::floor(p.y())),
                  z0 = int64_t(std::floor(p.z()));
    const double fx = fade(p.x() - double(x0));
    const double fy = fade(p.y() - double(y0));
    const double fz = fade(p.z() - double(z0));
    double corners[2][2][2];
    for (int dx = 0; dx < 2; ++dx)
      for (int dy = 0; dy < 2; ++dy)
        for (int dz = 0; dz < 2; ++dz)
          corners[dx][dy][dz] = lattice(x0 + dx, y0 + dy, z0 + dz, salt);
    auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
    const double xy0 = lerp(lerp(corners[0][0][0], corners[1][0][0], fx),
                            lerp(corners[0][1][0], corners[1][1][0], fx), fy);
    const double xy1 = lerp(lerp(corners[0][0][1], corners[1][0][1], fx),
                            lerp(corners[0][1][1], corners[1][1][1], fx), fy);
    return lerp(xy0, xy1, fz);
  }

  uint64_t seed_;
  double scale_;
  std::array<Vec3d, kNumParts + 1> base_;
};

}  // namespace artsplat
