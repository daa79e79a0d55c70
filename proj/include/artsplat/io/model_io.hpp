#pragma once

#include <zlib.h>

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "artsplat/core/chain.hpp"
#include "artsplat/core/model.hpp"
#include "artsplat/io/grid_io.hpp"

namespace artsplat {

inline constexpr int kModelVersionMajor = 1;
inline constexpr int kModelVersionMinor = 1;

struct ModelLoadResult {
  ArticulatedGaussianModel model;
  std::string stage;
  uint64_t seed = 0;
  int version_major = 0, version_minor = 0;
  std::string migration_note;  // nonempty when an older minor was upgraded
};

namespace detail {

inline void put_u16(std::string& out, uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
}

inline uint16_t read_u16(ByteReader& r) {
  const std::string b = r.bytes(2);
  return uint16_t(uint8_t(b[0])) | uint16_t(uint8_t(b[1])) << 8;
}

inline uint32_t crc_of(const std::string& s) {
  return uint32_t(
      crc32(0L, reinterpret_cast<const Bytef*>(s.data()), uInt(s.size())));
}

}  // namespace detail

// Layout: magic, version, chain text, stage string, seed (v1.1+), per-part
// counts, then per primitive the little-endian f32 fields mean, rotation,
// log_scale, opacity_logit, color. A CRC32 of everything before it closes the
// file.
inline void save_model(const std::string& path,
                       const ArticulatedGaussianModel& model,
                       const std::string& stage = "unspecified",
                       uint64_t seed = 0) {
  std::string out;
  out += "ASPL";
  detail::put_u16(out, uint16_t(kModelVersionMajor));
  detail::put_u16(out, uint16_t(kModelVersionMinor));
  const std::string chain_text = serialize_chain(model.chain());
  detail::put_u32(out, uint32_t(chain_text.size()));
  out += chain_text;
  detail::put_u32(out, uint32_t(stage.size()));
  out += stage;
  detail::put_u64(out, seed);
  detail::put_u32(out, uint32_t(kNumParts));
  for (int p = 0; p < kNumParts; ++p)
    detail::put_u32(out, uint32_t(model.part_count(p)));
  for (int p = 0; p < kNumParts; ++p) {
    const auto [lo, hi] = model.part_range(p);
    for (int i = lo; i < hi; ++i) {
      const GaussianPrimitive& g = model.primitives()[i];
      for (int k = 0; k < 3; ++k) detail::put_f32(out, g.mean[k]);
      for (int k = 0; k < 4; ++k) detail::put_f32(out, g.rotation[k]);
      for (int k = 0; k < 3; ++k) detail::put_f32(out, g.log_scale[k]);
      detail::put_f32(out, g.opacity_logit);
      for (int k = 0; k < 3; ++k) detail::put_f32(out, g.color[k]);
    }
  }
  detail::put_u32(out, detail::crc_of(out));
  detail::write_file_bytes(path, out);
}

inline ModelLoadResult load_model(const std::string& path) {
  const std::string data = detail::read_file_bytes(path);
  if (data.size() < 16) throw IoError(path + ": truncated model file");
  const std::string payload = data.substr(0, data.size() - 4);
  {
    detail::ByteReader cr(data, path);
    cr.bytes(data.size() - 4);
    if (cr.u32() != detail::crc_of(payload))
      throw IoError(path + ": checksum mismatch (corrupt or truncated)");
  }

  detail::ByteReader r(payload, path);
  if (r.bytes(4) != "ASPL") throw IoError(path + ": bad model magic");
  ModelLoadResult res;
  res.version_major = detail::read_u16(r);
  res.version_minor = detail::read_u16(r);
  if (res.version_major != kModelVersionMajor)
    throw IoError(path + ": unsupported model version " +
                  std::to_string(res.version_major) + "." +
                  std::to_string(res.version_minor));
  if (res.version_minor > kModelVersionMinor)
    throw IoError(path + ": file written by a newer library (version " +
                  std::to_string(res.version_major) + "." +
                  std::to_string(res.version_minor) + ")");
  const KinematicChain chain = parse_chain(r.bytes(r.u32()));
  res.stage = r.bytes(r.u32());
  if (res.version_minor >= 1) {
    res.seed = r.u64();
  } else {
    res.migration_note = "upgraded v1.0 file: seed defaulted to 0";
  }
  if (r.u32() != uint32_t(kNumParts))
    throw IoError(path + ": unexpected part count");
  std::array<uint32_t, kNumParts> counts;
  for (int p = 0; p < kNumParts; ++p) counts[p] = r.u32();
  std::vector<std::pair<int, std::vector<GaussianPrimitive>>> parts;
  for (int p = 0; p < kNumParts; ++p) {
    std::vector<GaussianPrimitive> prims(counts[p]);
    for (uint32_t i = 0; i < counts[p]; ++i) {
      GaussianPrimitive& g = prims[i];
      for (int k = 0; k < 3; ++k) g.mean[k] = r.f32();
      for (int k = 0; k < 4; ++k) g.rotation[k] = r.f32();
      for (int k = 0; k < 3; ++k) g.log_scale[k] = r.f32();
      g.opacity_logit = r.f32();
      for (int k = 0; k < 3; ++k) g.color[k] = r.f32();
      g.part_id = p;
    }
    parts.emplace_back(p, std::move(prims));
  }
  if (r.remaining() != 0) throw IoError(path + ": trailing bytes after payload");
  res.model = new_model(parts, chain);
  return res;
}

}  // namespace artsplat
