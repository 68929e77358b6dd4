// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "sgsynth/error.hpp"

namespace sgsynth {

namespace {

Eigen::MatrixXd covariance(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& mean) {
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const double denom = x.rows() > 1 ? static_cast<double>(x.rows() - 1) : 1.0;
  return (centered.transpose() * centered) / denom;
}

// Square root of a symmetric positive semi-definite matrix.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  // tr sqrt(A B) = tr sqrt(A^1/2 B A^1/2) for PSD A, B; the latter is symmetric.
  const Eigen::MatrixXd ra = sqrt_psd(a);
  const Eigen::MatrixXd m = ra * b * ra;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

void check_pairs(std::span<const SegmentationMap> pred, std::span<const SegmentationMap> truth) {
  if (pred.size() != truth.size()) throw DomainError("prediction and truth counts differ");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].height != truth[i].height || pred[i].width != truth[i].width) {
      throw DomainError("prediction and truth shapes differ at item " + std::to_string(i));
    }
  }
}

std::string class_key(int label) {
  static const char* names[] = {"background", "bus", "truck", "car", "person"};
  if (label < 0 || label >= kSegmentationClasses) throw DomainError("segmentation label out of range");
  return names[label];
}

nlohmann::json scores_json(const ClassScores& scores) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [label, value] : scores) {
    out[class_key(label)] = value ? nlohmann::json(*value) : nlohmann::json(nullptr);
  }
  const auto mean = mean_score(scores);
  out["mean"] = mean ? nlohmann::json(*mean) : nlohmann::json(nullptr);
  return out;
}

}  // namespace

FidResult compute_fid(const Eigen::MatrixXd& real, const Eigen::MatrixXd& fake, double epsilon) {
  if (real.cols() < 1 || real.cols() != fake.cols()) throw DomainError("feature dimensions must match and be >= 1");
  if (real.rows() < 1 || fake.rows() < 1) throw DomainError("FID needs at least one sample per set");

  const Eigen::RowVectorXd mu_r = real.colwise().mean();
  const Eigen::RowVectorXd mu_f = fake.colwise().mean();
  Eigen::MatrixXd cov_r = covariance(real, mu_r);
  Eigen::MatrixXd cov_f = covariance(fake, mu_f);

  FidResult result;
  if (real.rows() <= real.cols() || fake.rows() <= fake.cols()) {
    result.regularization = epsilon;
    cov_r.diagonal().array() += epsilon;
    cov_f.diagonal().array() += epsilon;
  }
  const double mean_term = (mu_r - mu_f).squaredNorm();
  const double trace_term = cov_r.trace() + cov_f.trace() - 2.0 * trace_sqrt_product(cov_r, cov_f);
  result.fid = std::max(0.0, mean_term + trace_term);
  return result;
}

ClassScores compute_miou(std::span<const SegmentationMap> pred, std::span<const SegmentationMap> truth,
                         std::span<const int> classes) {
  check_pairs(pred, truth);
  ClassScores out;
  for (int c : classes) {
    std::int64_t inter = 0;
    std::int64_t uni = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      for (std::size_t k = 0; k < pred[i].labels.size(); ++k) {
        const bool p = pred[i].labels[k] == c;
        const bool t = truth[i].labels[k] == c;
        inter += p && t;
        uni += p || t;
      }
    }
    out[c] = uni == 0 ? std::nullopt : std::optional<double>(static_cast<double>(inter) / static_cast<double>(uni));
  }
  return out;
}

ClassScores compute_pixel_accuracy(std::span<const SegmentationMap> pred, std::span<const SegmentationMap> truth,
                                   std::span<const int> classes) {
  check_pairs(pred, truth);
  ClassScores out;
  for (int c : classes) {
    std::int64_t correct = 0;
    std::int64_t total = 0;
    std::int64_t predicted = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      for (std::size_t k = 0; k < pred[i].labels.size(); ++k) {
        const bool t = truth[i].labels[k] == c;
        total += t;
        correct += t && pred[i].labels[k] == c;
        predicted += pred[i].labels[k] == c;
      }
    }
    if (total == 0) {
      // Absent from the truth: not applicable when also never predicted, otherwise 0.
      out[c] = predicted == 0 ? std::nullopt : std::optional<double>(0.0);
    } else {
      out[c] = static_cast<double>(correct) / static_cast<double>(total);
    }
  }
  return out;
}

std::optional<double> mean_score(const ClassScores& scores) {
  double sum = 0.0;
  int n = 0;
  for (const auto& [label, value] : scores) {
    if (value) {
      sum += *value;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::vector<int> evaluated_classes(bool include_bus) {
  std::vector<int> out;
  if (include_bus) out.push_back(segmentation_label(EntityClass::Bus));
  out.push_back(segmentation_label(EntityClass::Car));
  out.push_back(segmentation_label(EntityClass::Person));
  out.push_back(segmentation_label(EntityClass::Truck));
  return out;
}

RandomProjectionExtractor::RandomProjectionExtractor(int dim, std::uint64_t seed, int thumbnail)
    : dim_(dim), seed_(seed), thumbnail_(thumbnail) {
  if (dim < 1 || thumbnail < 1) throw DomainError("extractor dimensions must be positive");
  const int inputs = thumbnail * thumbnail * 3;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  projection_.resize(dim, inputs);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < inputs; ++c) projection_(r, c) = normal(rng) / std::sqrt(static_cast<double>(inputs));
  }
}

std::vector<double> RandomProjectionExtractor::embed(const RgbImage& image) const {
  const auto thumb = resize(image, thumbnail_, thumbnail_);
  Eigen::VectorXd x(static_cast<Eigen::Index>(thumb.data.size()));
  for (std::size_t i = 0; i < thumb.data.size(); ++i) x(static_cast<Eigen::Index>(i)) = thumb.data[i] / 255.0;
  const Eigen::VectorXd y = projection_ * x;
  return {y.data(), y.data() + y.size()};
}

std::string RandomProjectionExtractor::name() const {
  return "random-projection(dim=" + std::to_string(dim_) + ",seed=" + std::to_string(seed_) + ")";
}

Eigen::MatrixXd embed_all(const FeatureExtractor& extractor, std::span<const RgbImage> images) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(images.size()), extractor.dim());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto f = extractor.embed(images[i]);
    if (static_cast<int>(f.size()) != extractor.dim()) throw DomainError("extractor returned the wrong width");
    for (int d = 0; d < extractor.dim(); ++d) out(static_cast<Eigen::Index>(i), d) = f[static_cast<std::size_t>(d)];
  }
  return out;
}

SegmentationMap ReferenceSegmenter::segment(const RgbImage&, const DataPoint& reference, std::size_t) const {
  return reference.segmap;
}

SegmentationMap PrecomputedSegmenter::segment(const RgbImage& generated, const DataPoint&, std::size_t index) const {
  char name[32];
  std::snprintf(name, sizeof name, "%06zu.png", index);
  const auto gray = read_png_gray(dir_ / name);
  if (gray.height != generated.height || gray.width != generated.width) {
    throw IoError(dir_ / name, "segmentation size does not match the generated image");
  }
  for (auto v : gray.data) {
    if (v >= kSegmentationClasses) throw IoError(dir_ / name, "segmentation label out of range");
  }
  return {gray.height, gray.width, gray.data};
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json failures = report.failures;
  return {{"model", report.model},
          {"FID", report.fid},
          {"fid_regularization", report.fid_regularization},
          {"mIoU", scores_json(report.miou)},
          {"Accu.", scores_json(report.accuracy)},
          {"evaluated_images", report.evaluated},
          {"excluded_images", report.excluded},
          {"failures", failures},
          {"extractor", report.extractor},
          {"segmenter", report.segmenter},
          {"excluded_classes", report.miou.count(segmentation_label(EntityClass::Bus))
                                   ? nlohmann::json::array({"background"})
                                   : nlohmann::json::array({"background", "bus"})}};
}

EvalReport score_generated(std::span<const RgbImage> generated, std::span<const DataPoint> references,
                           const FeatureExtractor& extractor, const Segmenter& segmenter,
                           std::span<const int> classes) {
  if (generated.size() != references.size()) throw DomainError("generated and reference counts differ");
  for (int c : classes) {
    if (c == 0) throw DomainError("background is never scored");
  }
  EvalReport report;
  report.extractor = extractor.name();
  report.segmenter = segmenter.name();
  std::vector<RgbImage> reals;
  std::vector<SegmentationMap> preds;
  std::vector<SegmentationMap> truths;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    reals.push_back(references[i].image);
    preds.push_back(segmenter.segment(generated[i], references[i], i));
    truths.push_back(references[i].segmap);
  }
  const auto fid = compute_fid(embed_all(extractor, reals), embed_all(extractor, generated));
  report.fid = fid.fid;
  report.fid_regularization = fid.regularization;
  report.miou = compute_miou(preds, truths, classes);
  report.accuracy = compute_pixel_accuracy(preds, truths, classes);
  report.evaluated = generated.size();
  return report;
}

}  // namespace sgsynth
