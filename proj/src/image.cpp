// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/image.hpp"

#include <cmath>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "sgsynth/error.hpp"

namespace sgsynth {

namespace {

cv::Mat to_bgr(const RgbImage& image) {
  cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.data.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

RgbImage from_bgr(const cv::Mat& bgr) {
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  RgbImage out(rgb.rows, rgb.cols);
  for (int y = 0; y < rgb.rows; ++y) {
    std::copy_n(rgb.ptr<std::uint8_t>(y), static_cast<std::size_t>(rgb.cols) * 3, out.pixel(y, 0));
  }
  return out;
}

// Deterministic, metadata-free PNG settings so identical images give identical bytes.
const std::vector<int> kPngParams = {cv::IMWRITE_PNG_COMPRESSION, 6};

}  // namespace

PixelRect pixel_rect(const BBox& box, int height, int width) {
  // Pixel px is covered iff its center (px + 0.5) / width lies in [x - w/2, x + w/2).
  auto range = [](double lo, double hi, int n) {
    int a = std::max(0, static_cast<int>(std::floor(lo * n - 0.5)) - 1);
    int b = std::min(n, static_cast<int>(std::ceil(hi * n - 0.5)) + 1);
    while (a < n && (a + 0.5) / n < lo) ++a;
    while (b > a && (b - 1 + 0.5) / n >= hi) --b;
    return std::pair{a, std::max(a, b)};
  };
  const auto [x0, x1] = range(box.x - box.w / 2, box.x + box.w / 2, width);
  const auto [y0, y1] = range(box.y - box.h / 2, box.y + box.h / 2, height);
  return {x0, y0, x1, y1};
}

std::vector<Rgb> crop_pixels(const RgbImage& image, const PixelRect& rect) {
  if (rect.x0 < 0 || rect.y0 < 0 || rect.x1 > image.width || rect.y1 > image.height) {
    throw DomainError("crop lies outside the image");
  }
  std::vector<Rgb> out;
  out.reserve(static_cast<std::size_t>(std::max(0, rect.x1 - rect.x0) * std::max(0, rect.y1 - rect.y0)));
  for (int y = rect.y0; y < rect.y1; ++y) {
    for (int x = rect.x0; x < rect.x1; ++x) {
      const auto* p = image.pixel(y, x);
      out.push_back(from_bytes(p[0], p[1], p[2]));
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  std::vector<std::uint8_t> bytes;
  if (!cv::imencode(".png", to_bgr(image), bytes, kPngParams)) throw DomainError("PNG encoding failed");
  return bytes;
}

std::vector<std::uint8_t> encode_png(const GrayImage& image) {
  cv::Mat gray(image.height, image.width, CV_8UC1, const_cast<std::uint8_t*>(image.data.data()));
  std::vector<std::uint8_t> bytes;
  if (!cv::imencode(".png", gray, bytes, kPngParams)) throw DomainError("PNG encoding failed");
  return bytes;
}

RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes) {
  const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  const cv::Mat bgr = cv::imdecode(buffer, cv::IMREAD_COLOR);
  if (bgr.empty()) throw DomainError("could not decode PNG");
  return from_bgr(bgr);
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  if (!cv::imwrite(path.string(), to_bgr(image), kPngParams)) throw IoError(path, "cannot write image");
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  cv::Mat gray(image.height, image.width, CV_8UC1, const_cast<std::uint8_t*>(image.data.data()));
  if (!cv::imwrite(path.string(), gray, kPngParams)) throw IoError(path, "cannot write image");
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError(path, "cannot read image");
  return from_bgr(bgr);
}

GrayImage read_png_gray(const std::filesystem::path& path) {
  const cv::Mat gray = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (gray.empty()) throw IoError(path, "cannot read image");
  if (gray.type() != CV_8UC1) throw IoError(path, "expected a single-channel 8-bit image");
  GrayImage out{gray.rows, gray.cols, std::vector<std::uint8_t>(static_cast<std::size_t>(gray.total()))};
  for (int y = 0; y < gray.rows; ++y) {
    std::copy_n(gray.ptr<std::uint8_t>(y), gray.cols, out.data.data() + static_cast<std::size_t>(y) * gray.cols);
  }
  return out;
}

RgbImage resize(const RgbImage& image, int height, int width) {
  if (image.height == height && image.width == width) return image;
  cv::Mat src(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.data.data()));
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(width, height), 0, 0, cv::INTER_AREA);
  RgbImage out(height, width);
  for (int y = 0; y < height; ++y) std::copy_n(dst.ptr<std::uint8_t>(y), width * 3, out.pixel(y, 0));
  return out;
}

}  // namespace sgsynth
