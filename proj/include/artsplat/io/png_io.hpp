#pragma once

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "artsplat/core/common.hpp"
#include "artsplat/core/grid.hpp"

namespace artsplat {

namespace detail {

struct PngFile {
  std::FILE* fp = nullptr;
  explicit PngFile(const std::string& path, const char* mode) {
    fp = std::fopen(path.c_str(), mode);
    if (!fp) throw IoError("cannot open " + path);
  }
  ~PngFile() {
    if (fp) std::fclose(fp);
  }
  PngFile(const PngFile&) = delete;
  PngFile& operator=(const PngFile&) = delete;
};

// Part-id palette: background plus one saturated color per label keeps the
// semantics PNG viewable while staying byte-exact.
inline const png_color* label_palette(int& n) {
  static const png_color pal[8] = {{30, 30, 30},    {200, 200, 210},
                                   {220, 180, 60},  {70, 120, 220},
                                   {220, 90, 80},   {120, 220, 120},
                                   {200, 120, 220}, {240, 240, 240}};
  n = 8;
  return pal;
}

}  // namespace detail

inline void save_png_rgb(const std::string& path, const GridF& img) {
  if (img.channels() != 3 || img.empty())
    throw ValidationError("save_png_rgb: expected a nonempty H x W x 3 image");
  detail::PngFile f(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng init failed for " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng write failed for " + path);
  }
  png_init_io(png, f.fp);
  png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> row(size_t(img.width()) * 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c)
        row[size_t(x) * 3 + c] = uint8_t(
            std::lround(std::clamp(img.at(y, x, c), 0.0, 1.0) * 255.0));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline GridF load_png_rgb(const std::string& path) {
  detail::PngFile f(path, "rb");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng init failed for " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng read failed for " + path);
  }
  png_init_io(png, f.fp);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int h = png_get_image_height(png, info);
  const int w = png_get_image_width(png, info);
  if (png_get_channels(png, info) != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unexpected channel count in " + path);
  }
  GridF img(h, w, 3);
  std::vector<uint8_t> row(size_t(w) * 3);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = row[size_t(x) * 3 + c] / 255.0;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

// Label maps travel as palette PNGs: the pixel bytes are the labels.
inline void save_png_indexed(const std::string& path, const GridU8& labels) {
  if (labels.channels() != 1 || labels.empty())
    throw ValidationError("save_png_indexed: expected a nonempty H x W map");
  int pal_n = 0;
  const png_color* pal = detail::label_palette(pal_n);
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels.data()[i] >= pal_n)
      throw ValidationError("save_png_indexed: label exceeds palette size");
  detail::PngFile f(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng init failed for " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng write failed for " + path);
  }
  png_init_io(png, f.fp);
  png_set_IHDR(png, info, labels.width(), labels.height(), 8,
               PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_PLTE(png, info, const_cast<png_color*>(pal), pal_n);
  png_write_info(png, info);
  for (int y = 0; y < labels.height(); ++y)
    png_write_row(png, const_cast<png_bytep>(labels.row(y)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline GridU8 load_png_indexed(const std::string& path) {
  detail::PngFile f(path, "rb");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng init failed for " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng read failed for " + path);
  }
  png_init_io(png, f.fp);
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_PALETTE) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path + " is not an indexed PNG");
  }
  png_set_packing(png);  // < 8-bit palettes expand to one byte per pixel
  png_read_update_info(png, info);
  const int h = png_get_image_height(png, info);
  const int w = png_get_image_width(png, info);
  GridU8 labels(h, w, 1);
  for (int y = 0; y < h; ++y) png_read_row(png, labels.row(y), nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return labels;
}

}  // namespace artsplat
