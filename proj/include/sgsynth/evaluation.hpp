// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// FID, per-class IoU and per-class pixel accuracy.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sgsynth/dataset.hpp"

namespace sgsynth {

struct FidResult {
  double fid = 0.0;
  /// Diagonal loading added to both covariances (0 when none was needed).
  double regularization = 0.0;
};

/// Frechet distance between Gaussian fits of two feature sets (rows are samples).
/// When either set has no more samples than dimensions, `epsilon` is added to
/// both covariance diagonals and reported.
FidResult compute_fid(const Eigen::MatrixXd& real, const Eigen::MatrixXd& fake, double epsilon = 1e-6);

/// Per-class scores; nullopt when the class is absent from both prediction and truth.
using ClassScores = std::map<int, std::optional<double>>;

/// |pred == c and true == c| / |pred == c or true == c|, aggregated over the set.
ClassScores compute_miou(std::span<const SegmentationMap> pred, std::span<const SegmentationMap> truth,
                         std::span<const int> classes);

/// Correctly labeled pixels of class c / pixels of class c in the truth.
ClassScores compute_pixel_accuracy(std::span<const SegmentationMap> pred, std::span<const SegmentationMap> truth,
                                   std::span<const int> classes);

/// Mean over applicable classes; nullopt when none apply.
std::optional<double> mean_score(const ClassScores& scores);

/// Segmentation labels scored by default: car, person, truck. Background is
/// never scored; bus is dropped unless `include_bus`.
std::vector<int> evaluated_classes(bool include_bus = false);

/// Image -> fixed-length embedding.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual int dim() const = 0;
  virtual std::vector<double> embed(const RgbImage& image) const = 0;
  virtual std::string name() const = 0;
};

/// Area-downsampled pixels through a fixed seeded Gaussian projection.
class RandomProjectionExtractor final : public FeatureExtractor {
 public:
  explicit RandomProjectionExtractor(int dim = 64, std::uint64_t seed = 0, int thumbnail = 16);

  int dim() const override { return dim_; }
  std::vector<double> embed(const RgbImage& image) const override;
  std::string name() const override;

 private:
  int dim_;
  std::uint64_t seed_;
  int thumbnail_;
  Eigen::MatrixXd projection_;
};

Eigen::MatrixXd embed_all(const FeatureExtractor& extractor, std::span<const RgbImage> images);

/// Generated image -> label map.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  /// `index` is the test point's position in the evaluation order.
  virtual SegmentationMap segment(const RgbImage& generated, const DataPoint& reference, std::size_t index) const = 0;
  virtual std::string name() const = 0;
};

/// Returns the reference segmentation map unchanged (desk-scale plumbing checks).
class ReferenceSegmenter final : public Segmenter {
 public:
  SegmentationMap segment(const RgbImage& generated, const DataPoint& reference, std::size_t index) const override;
  std::string name() const override { return "reference"; }
};

/// Reads `<dir>/<index as 6 digits>.png` label maps produced by an external segmenter.
class PrecomputedSegmenter final : public Segmenter {
 public:
  explicit PrecomputedSegmenter(std::filesystem::path dir) : dir_(std::move(dir)) {}
  SegmentationMap segment(const RgbImage& generated, const DataPoint& reference, std::size_t index) const override;
  std::string name() const override { return "precomputed:" + dir_.string(); }

 private:
  std::filesystem::path dir_;
};

struct EvalReport {
  std::string model;
  double fid = 0.0;
  double fid_regularization = 0.0;
  ClassScores miou;
  ClassScores accuracy;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
  std::vector<std::string> failures;
  std::string extractor;
  std::string segmenter;
};

/// JSON mirroring the results table: FID, then mIoU and Accu. per class name.
nlohmann::json to_json(const EvalReport& report);

/// Metrics over already generated images. `generated[i]` pairs with `references[i]`.
EvalReport score_generated(std::span<const RgbImage> generated, std::span<const DataPoint> references,
                           const FeatureExtractor& extractor, const Segmenter& segmenter,
                           std::span<const int> classes);

}  // namespace sgsynth
