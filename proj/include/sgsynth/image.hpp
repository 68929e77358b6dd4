// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sgsynth/scene.hpp"

namespace sgsynth {

/// Interleaved 8-bit RGB, row-major.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0) {}

  std::uint8_t* pixel(int y, int x) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int y, int x) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  bool operator==(const RgbImage&) const = default;
};

/// Single-channel 8-bit image (segmentation labels).
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  bool operator==(const GrayImage&) const = default;
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool operator==(const PixelRect&) const = default;
};

/// Pixels whose centers fall inside the normalized box.
PixelRect pixel_rect(const BBox& box, int height, int width);

/// Pixels of `rect` scaled to [0,1]. Throws DomainError if rect leaves the image.
std::vector<Rgb> crop_pixels(const RgbImage& image, const PixelRect& rect);

std::vector<std::uint8_t> encode_png(const RgbImage& image);
std::vector<std::uint8_t> encode_png(const GrayImage& image);
RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);
RgbImage read_png_rgb(const std::filesystem::path& path);
GrayImage read_png_gray(const std::filesystem::path& path);

/// Area-interpolated resize.
RgbImage resize(const RgbImage& image, int height, int width);

}  // namespace sgsynth
