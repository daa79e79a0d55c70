#pragma once

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "artsplat/core/common.hpp"
#include "artsplat/core/grid.hpp"

namespace artsplat {

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(out, v);
}

class ByteReader {
 public:
  ByteReader(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  float f32() {
    const uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }

  std::string bytes(size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  size_t pos() const { return pos_; }
  size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(size_t n) const {
    if (pos_ + n > data_.size()) throw IoError(path_ + ": truncated file");
  }
  const std::string& data_;
  std::string path_;
  size_t pos_ = 0;
};

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

inline void write_file_bytes(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(data.data(), std::streamsize(data.size()));
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace detail

// 16-byte header (magic + h + w + c), then row-major little-endian f32.
inline void save_grid(const std::string& path, const GridF& grid) {
  std::string out;
  out.reserve(16 + grid.size() * 4);
  out += "AGRD";
  detail::put_u32(out, uint32_t(grid.height()));
  detail::put_u32(out, uint32_t(grid.width()));
  detail::put_u32(out, uint32_t(grid.channels()));
  for (size_t i = 0; i < grid.size(); ++i)
    detail::put_f32(out, float(grid.data()[i]));
  detail::write_file_bytes(path, out);
}

inline GridF load_grid(const std::string& path) {
  const std::string data = detail::read_file_bytes(path);
  detail::ByteReader r(data, path);
  if (r.bytes(4) != "AGRD") throw IoError(path + ": bad grid magic");
  const uint32_t h = r.u32(), w = r.u32(), c = r.u32();
  if (h == 0 || w == 0 || c == 0 || h > 1u << 20 || w > 1u << 20 || c > 64)
    throw IoError(path + ": implausible grid shape");
  if (r.remaining() != size_t(h) * w * c * 4)
    throw IoError(path + ": size does not match header");
  GridF grid{int(h), int(w), int(c)};
  for (size_t i = 0; i < grid.size(); ++i) grid.data()[i] = r.f32();
  return grid;
}

}  // namespace artsplat
