// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! PNG reading and writing on top of libpng. Link against PNG::PNG.

#pragma once

#include <lzu/core.hpp>
#include <lzu/error.hpp>
#include <lzu/saliency.hpp>

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace lzu::png {

/// Decoded pixels with their original bit depth (8 or 16). Palette images are
/// expanded; alpha is dropped.
struct RawPng {
  std::size_t height = 0, width = 0, channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

inline RawPng read_raw(const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw ValidationError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw ValidationError(path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png_create_info_struct failed");
  }
  RawPng out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError("failed to decode " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_png(png, info, PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_PACKING,
               nullptr);
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  png_bytepp rows = png_get_rows(png, info);
  out.samples.resize(out.height * out.width * out.channels);
  const std::size_t per_row = out.width * out.channels;
  for (std::size_t r = 0; r < out.height; ++r) {
    const png_bytep row = rows[r];
    for (std::size_t i = 0; i < per_row; ++i) {
      out.samples[r * per_row + i] =
          out.bit_depth == 16 ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1])
                              : static_cast<std::uint16_t>(row[i]);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (out.channels != 1 && out.channels != 3) throw ValidationError("unsupported PNG channel layout");
  return out;
}

/// 8-bit gray or RGB image with values in [0, 255]. 16-bit inputs are scaled.
inline Image read_image(const std::filesystem::path& path) {
  RawPng raw = read_raw(path);
  Image img(raw.height, raw.width, raw.channels);
  auto data = img.data();
  const float scale = raw.bit_depth == 16 ? 255.0f / 65535.0f : 1.0f;
  for (std::size_t i = 0; i < raw.samples.size(); ++i) data[i] = static_cast<float>(raw.samples[i]) * scale;
  return img;
}

/// Single-channel 8- or 16-bit label image.
inline LabelGrid read_labels(const std::filesystem::path& path) {
  RawPng raw = read_raw(path);
  if (raw.channels != 1) throw ValidationError("label PNG must be single-channel");
  LabelGrid g{raw.height, raw.width, std::vector<std::int32_t>(raw.samples.begin(), raw.samples.end())};
  return g;
}

/// Writes a 1- or 3-channel image as 8-bit PNG, rounding and clamping to [0, 255].
template <typename T>
void write_image(const std::filesystem::path& path, const ImageTensor<T>& img) {
  if (img.channels() != 1 && img.channels() != 3) throw InvalidArgument("PNG output needs 1 or 3 channels");
  detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw Error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }
  const std::size_t per_row = img.width() * img.channels();
  std::vector<png_byte> buf(img.height() * per_row);
  const auto data = img.data();
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const double v = std::nearbyint(static_cast<double>(data[i]));
    buf[i] = static_cast<png_byte>(std::clamp(v, 0.0, 255.0));
  }
  std::vector<png_bytep> rows(img.height());
  for (std::size_t r = 0; r < img.height(); ++r) rows[r] = buf.data() + r * per_row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("failed to encode " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Writes a single-channel 16-bit label PNG.
inline void write_labels(const std::filesystem::path& path, const LabelGrid& g) {
  detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw Error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("libpng initialisation failed");
  }
  std::vector<png_byte> buf(g.rows * g.cols * 2);
  for (std::size_t i = 0; i < g.labels.size(); ++i) {
    if (g.labels[i] < 0 || g.labels[i] > 65535) {
      png_destroy_write_struct(&png, &info);
      throw InvalidArgument("label outside 16-bit range");
    }
    buf[2 * i] = static_cast<png_byte>(g.labels[i] >> 8);
    buf[2 * i + 1] = static_cast<png_byte>(g.labels[i] & 0xff);
  }
  std::vector<png_bytep> rows(g.rows);
  for (std::size_t r = 0; r < g.rows; ++r) rows[r] = buf.data() + r * g.cols * 2;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("failed to encode " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(g.cols), static_cast<png_uint_32>(g.rows), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace lzu::png
