// Image containers plus PFM / PNG persistence.
//
// Float images hold linear values; sRGB encoding happens only at the PNG
// boundary.  Depth maps are stored as 32-bit float PFM, masks as 0/255
// 8-bit PNG.

#pragma once

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "splatalign/types.hpp"

namespace splatalign {

template <typename T>
struct Image {
  int width = 0, height = 0, channels = 1;
  std::vector<T> data;  // row-major, interleaved channels

  Image() = default;
  Image(int w, int h, int c, T fill = T{})
      : width(w), height(h), channels(c), data(std::size_t(w) * h * c, fill) {}

  T& at(int y, int x, int c = 0) {
    return data[(std::size_t(y) * width + x) * channels + c];
  }
  const T& at(int y, int x, int c = 0) const {
    return data[(std::size_t(y) * width + x) * channels + c];
  }
  bool contains(int y, int x) const {
    return y >= 0 && y < height && x >= 0 && x < width;
  }
  std::size_t pixel_count() const { return std::size_t(width) * height; }
};

using ImageD = Image<double>;
using ImageU8 = Image<std::uint8_t>;

/// Binary mask helpers; a pixel is foreground when nonzero.
inline std::size_t mask_area(const ImageU8& mask) {
  std::size_t n = 0;
  for (auto v : mask.data) n += v ? 1 : 0;
  return n;
}

inline double srgb_encode(double linear) {
  linear = std::clamp(linear, 0.0, 1.0);
  return linear <= 0.0031308 ? 12.92 * linear
                             : 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

inline double srgb_decode(double encoded) {
  encoded = std::clamp(encoded, 0.0, 1.0);
  return encoded <= 0.04045 ? encoded / 12.92
                            : std::pow((encoded + 0.055) / 1.055, 2.4);
}

// ---------------------------------------------------------------------------
// PFM (32-bit float, little endian, rows stored bottom-up)

inline void save_pfm(const ImageD& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    throw invalid_argument_error("save_pfm: 1 or 3 channels required");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw format_error("save_pfm: cannot open " + path);
  std::fprintf(f, "%s\n%d %d\n-1.0\n", img.channels == 1 ? "Pf" : "PF", img.width,
               img.height);
  std::vector<float> row(std::size_t(img.width) * img.channels);
  for (int y = img.height - 1; y >= 0; --y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        row[std::size_t(x) * img.channels + c] = static_cast<float>(img.at(y, x, c));
    std::fwrite(row.data(), sizeof(float), row.size(), f);
  }
  std::fclose(f);
}

inline ImageD load_pfm(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw format_error("load_pfm: cannot open " + path);
  char magic[3] = {};
  int w = 0, h = 0;
  double scale = 0;
  if (std::fscanf(f, "%2s %d %d %lf", magic, &w, &h, &scale) != 4 || w <= 0 || h <= 0) {
    std::fclose(f);
    throw format_error("load_pfm: bad header in " + path);
  }
  std::fgetc(f);  // single whitespace after the scale line
  const int channels = std::strcmp(magic, "PF") == 0 ? 3 : 1;
  if (channels == 1 && std::strcmp(magic, "Pf") != 0) {
    std::fclose(f);
    throw format_error("load_pfm: unknown magic in " + path);
  }
  if (scale > 0) {
    std::fclose(f);
    throw format_error("load_pfm: big-endian PFM not supported: " + path);
  }
  ImageD img(w, h, channels);
  std::vector<float> row(std::size_t(w) * channels);
  for (int y = h - 1; y >= 0; --y) {
    if (std::fread(row.data(), sizeof(float), row.size(), f) != row.size()) {
      std::fclose(f);
      throw format_error("load_pfm: truncated data in " + path);
    }
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) img.at(y, x, c) = row[std::size_t(x) * channels + c];
  }
  std::fclose(f);
  return img;
}

// ---------------------------------------------------------------------------
// PNG (8-bit gray or RGB)

inline void save_png(const ImageU8& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    throw invalid_argument_error("save_png: 1 or 3 channels required");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw format_error("save_png: cannot open " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(f);
    throw format_error("save_png: libpng failure for " + path);
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(&img.data[std::size_t(y) * img.width * img.channels]);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

inline ImageU8 load_png(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw format_error("load_png: cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    std::fclose(f);
    throw format_error("load_png: libpng failure for " + path);
  }
  png_init_io(png, f);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int w = png_get_image_width(png, info);
  const int h = png_get_image_height(png, info);
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(f);
    throw format_error("load_png: unsupported channel count in " + path);
  }
  ImageU8 img(w, h, channels);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = &img.data[std::size_t(y) * w * channels];
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(f);
  return img;
}

/// Linear color image -> 8-bit sRGB PNG buffer.
inline ImageU8 to_srgb8(const ImageD& linear) {
  ImageU8 out(linear.width, linear.height, linear.channels);
  for (std::size_t i = 0; i < linear.data.size(); ++i)
    out.data[i] =
        static_cast<std::uint8_t>(std::lround(srgb_encode(linear.data[i]) * 255.0));
  return out;
}

/// Binary mask -> 0/255 PNG buffer.
inline ImageU8 mask_image(const std::vector<std::uint8_t>& fg, int w, int h) {
  ImageU8 out(w, h, 1);
  for (std::size_t i = 0; i < fg.size(); ++i) out.data[i] = fg[i] ? 255 : 0;
  return out;
}

}  // namespace splatalign
