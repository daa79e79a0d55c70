#pragma once

#include <artsplat/core/chain.hpp>
#include <artsplat/core/types.hpp>

#include <utility>
#include <vector>

namespace artsplat {

// All primitives of one instrument, flattened part by part. Immutable except
// through the optimizer's apply step; readers may share it freely.
class ArticulatedGaussianModel {
 public:
  ArticulatedGaussianModel() = default;

  const KinematicChain& chain() const { return chain_; }
  const std::vector<GaussianPrimitive>& primitives() const { return prims_; }
  std::vector<GaussianPrimitive>& mutable_primitives() { return prims_; }
  int size() const { return int(prims_.size()); }

  // Half-open [begin, end) range of part `p` in the flat array.
  std::pair<int, int> part_range(int p) const {
    return {offsets_[p], offsets_[p + 1]};
  }
  int part_count(int p) const { return offsets_[p + 1] - offsets_[p]; }

 private:
  friend ArticulatedGaussianModel new_model(
      const std::vector<std::pair<int, std::vector<GaussianPrimitive>>>& parts,
      const KinematicChain& chain);

  KinematicChain chain_;
  std::vector<GaussianPrimitive> prims_;
  std::array<int, kNumParts + 1> offsets_{};
};

inline void validate_primitive(const GaussianPrimitive& g, int index) {
  const auto ctx = [&](const char* what) {
    return ValidationError("primitive " + std::to_string(index) + ": " + what);
  };
  if (!g.mean.allFinite() || !g.rotation.allFinite() || !g.log_scale.allFinite() ||
      !std::isfinite(g.opacity_logit) || !g.color.allFinite())
    throw ctx("non-finite field");
  if (std::abs(g.rotation.norm() - 1.f) > 1e-4f) throw ctx("rotation quaternion is not unit");
  if (g.part_id < 0 || g.part_id >= kNumParts) throw ctx("part_id out of range");
  if ((g.color.array() < 0.f).any() || (g.color.array() > 1.f).any())
    throw ctx("color outside [0,1]");
}

// Groups primitives by part in chain order; input order within a part is kept.
inline ArticulatedGaussianModel new_model(
    const std::vector<std::pair<int, std::vector<GaussianPrimitive>>>& parts,
    const KinematicChain& chain) {
  chain.validate();
  std::array<const std::vector<GaussianPrimitive>*, kNumParts> by_part{};
  for (const auto& [pid, prims] : parts) {
    if (pid < 0 || pid >= kNumParts)
      throw ValidationError("new_model: unknown part_id " + std::to_string(pid));
    if (by_part[pid]) throw ValidationError("new_model: duplicate group for part " +
                                            std::to_string(pid));
    if (prims.empty())
      throw ValidationError("new_model: part " + std::to_string(pid) + " has no primitives");
    by_part[pid] = &prims;
  }
  for (int p = 0; p < kNumParts; ++p)
    if (!by_part[p]) throw ValidationError("new_model: missing part " + std::to_string(p));

  ArticulatedGaussianModel m;
  m.chain_ = chain;
  m.offsets_[0] = 0;
  for (int p = 0; p < kNumParts; ++p) {
    for (const GaussianPrimitive& g : *by_part[p]) {
      if (g.part_id != p)
        throw ValidationError("new_model: primitive filed under part " + std::to_string(p) +
                              " claims part " + std::to_string(g.part_id));
      validate_primitive(g, int(m.prims_.size()));
      GaussianPrimitive canon = g;
      canon.rotation = quat_canonical(canon.rotation.cast<double>()).cast<float>();
      m.prims_.push_back(canon);
    }
    m.offsets_[p + 1] = int(m.prims_.size());
  }
  return m;
}

}  // namespace artsplat
