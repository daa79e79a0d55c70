#pragma once

#include <artsplat/core/common.hpp>

#include <random>

namespace artsplat {

// mt19937_64 core with hand-rolled uniform/normal mappings. std::*_distribution
// output differs between standard library implementations, which would break
// byte-identical reruns, so the mappings live here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

  // [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    int v = lo + static_cast<int>(uniform() * static_cast<double>(hi - lo + 1));
    return v > hi ? hi : v;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vec3d normal3() {
    Vec3d v;
    v << normal(), normal(), normal();
    return v;
  }

  Vec3d unit_vector() {
    Vec3d v = normal3();
    const double n = v.norm();
    return n > 1e-12 ? Vec3d(v / n) : Vec3d(0, 0, 1);
  }

  // Independent child stream; splitmix64 scrambles (seed, stream) together.
  Rng fork(uint64_t stream) const {
    uint64_t z = seed_ + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return Rng(z ^ (z >> 31));
  }

  uint64_t raw() { return gen_(); }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace artsplat
