#pragma once

#include <artsplat/core/common.hpp>

#include <vector>

namespace artsplat {

// Dense H x W x C buffer, row-major, channel-interleaved.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, int channels = 1, T fill = T{})
      : h_(height), w_(width), c_(channels),
        data_(static_cast<size_t>(height) * width * channels, fill) {}

  int height() const { return h_; }
  int width() const { return w_; }
  int channels() const { return c_; }
  bool empty() const { return data_.empty(); }
  size_t size() const { return data_.size(); }

  T& at(int y, int x, int ch = 0) { return data_[(static_cast<size_t>(y) * w_ + x) * c_ + ch]; }
  const T& at(int y, int x, int ch = 0) const {
    return data_[(static_cast<size_t>(y) * w_ + x) * c_ + ch];
  }

  T* row(int y) { return data_.data() + static_cast<size_t>(y) * w_ * c_; }
  const T* row(int y) const { return data_.data() + static_cast<size_t>(y) * w_ * c_; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Grid& o) const { return h_ == o.h_ && w_ == o.w_ && c_ == o.c_; }

  bool operator==(const Grid& o) const {
    return h_ == o.h_ && w_ == o.w_ && c_ == o.c_ && data_ == o.data_;
  }

 private:
  int h_ = 0, w_ = 0, c_ = 0;
  std::vector<T> data_;
};

using GridF = Grid<double>;
using GridU8 = Grid<uint8_t>;

}  // namespace artsplat
