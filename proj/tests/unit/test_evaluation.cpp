// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <complex>
#include <random>

#include "sgsynth/error.hpp"
#include "sgsynth/evaluation.hpp"

using namespace sgsynth;

namespace {

Eigen::MatrixXd gaussian(std::mt19937_64& rng, int n, const Eigen::VectorXd& mean, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(n, mean.size());
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < mean.size(); ++d) x(i, d) = mean(d) + scale * normal(rng);
  }
  return x;
}

Eigen::MatrixXd correlated(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd mix(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) mix(i, j) = normal(rng);
  }
  Eigen::MatrixXd z(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) z(i, j) = normal(rng);
  }
  return z * mix;
}

// Independent route: eigenvalues of the (non-symmetric) product via the general solver.
double fid_general_eigen(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::RowVectorXd ma = a.colwise().mean();
  const Eigen::RowVectorXd mb = b.colwise().mean();
  const Eigen::MatrixXd ca = (a.rowwise() - ma).transpose() * (a.rowwise() - ma) / double(a.rows() - 1);
  const Eigen::MatrixXd cb = (b.rowwise() - mb).transpose() * (b.rowwise() - mb) / double(b.rows() - 1);
  Eigen::EigenSolver<Eigen::MatrixXd> eig(ca * cb);
  double tr_sqrt = 0.0;
  for (int i = 0; i < eig.eigenvalues().size(); ++i) tr_sqrt += std::sqrt(eig.eigenvalues()(i)).real();
  return (ma - mb).squaredNorm() + ca.trace() + cb.trace() - 2.0 * tr_sqrt;
}

SegmentationMap map_from(int h, int w, std::initializer_list<std::tuple<int, int, int, int, int>> rects) {
  SegmentationMap m{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h * w), 0)};
  for (const auto& [label, x0, y0, x1, y1] : rects) {
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) m.labels[static_cast<std::size_t>(y * w + x)] = static_cast<std::uint8_t>(label);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("FID of a set with itself is zero") {
  std::mt19937_64 rng(1);
  const auto a = correlated(rng, 300, 6);
  CHECK(compute_fid(a, a).fid < 1e-6);
}

TEST_CASE("FID is symmetric and order invariant") {
  std::mt19937_64 rng(2);
  const auto a = correlated(rng, 200, 5);
  const auto b = correlated(rng, 250, 5);
  const double ab = compute_fid(a, b).fid;
  CHECK(std::abs(ab - compute_fid(b, a).fid) < 1e-6);

  Eigen::PermutationMatrix<Eigen::Dynamic> perm(a.rows());
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + perm.indices().size(), rng);
  CHECK(std::abs(ab - compute_fid(perm * a, b).fid) < 1e-6);
}

TEST_CASE("FID matches the general-eigensolver route") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = correlated(rng, 400, 4 + trial);
    const auto b = correlated(rng, 350, 4 + trial);
    const double expected = fid_general_eigen(a, b);
    CHECK(std::abs(compute_fid(a, b).fid - expected) < 1e-6 * std::max(1.0, expected));
  }
}

TEST_CASE("Gaussian analytic case: N(0,I) vs N(mu,I) gives |mu|^2") {
  std::mt19937_64 rng(4);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(8);
  mu.head(4).setConstant(1.0);
  const auto a = gaussian(rng, 10000, Eigen::VectorXd::Zero(8));
  const auto b = gaussian(rng, 10000, mu);
  const double fid = compute_fid(a, b).fid;
  CHECK(std::abs(fid - 4.0) / 4.0 < 0.05);
}

TEST_CASE("degenerate covariance is regularized and reported") {
  std::mt19937_64 rng(5);
  const auto a = correlated(rng, 4, 8);
  const auto b = correlated(rng, 4, 8);
  const auto r = compute_fid(a, b);
  CHECK(r.regularization > 0.0);
  CHECK(std::isfinite(r.fid));
  CHECK(compute_fid(correlated(rng, 50, 3), correlated(rng, 50, 3)).regularization == 0.0);
  CHECK_THROWS_AS(compute_fid(a, correlated(rng, 4, 7)), DomainError);
}

TEST_CASE("perfect prediction scores 1") {
  const std::vector<SegmentationMap> truth = {map_from(10, 10, {{3, 0, 0, 5, 5}, {4, 6, 6, 8, 9}, {2, 5, 0, 10, 3}})};
  const auto classes = evaluated_classes();
  const auto iou = compute_miou(truth, truth, classes);
  const auto acc = compute_pixel_accuracy(truth, truth, classes);
  for (int c : classes) {
    CHECK(iou.at(c) == 1.0);
    CHECK(acc.at(c) == 1.0);
  }
}

TEST_CASE("disjoint equal-area masks score 0") {
  const std::vector<SegmentationMap> pred = {map_from(10, 10, {{3, 0, 0, 5, 5}})};
  const std::vector<SegmentationMap> truth = {map_from(10, 10, {{3, 5, 5, 10, 10}})};
  const std::vector<int> cars = {3};
  CHECK(compute_miou(pred, truth, cars).at(3) == 0.0);
}

TEST_CASE("equal boxes overlapping half their area give IoU 1/3") {
  // a = 4x6 = 24 px each, overlap 4x3 = 12: 12 / (24 + 24 - 12) = 1/3.
  const std::vector<SegmentationMap> pred = {map_from(12, 12, {{3, 0, 0, 4, 6}})};
  const std::vector<SegmentationMap> truth = {map_from(12, 12, {{3, 0, 3, 4, 9}})};
  const std::vector<int> cars = {3};
  CHECK(compute_miou(pred, truth, cars).at(3).value() == 1.0 / 3.0);
}

TEST_CASE("pixel accuracy fixtures") {
  const std::vector<SegmentationMap> truth = {map_from(10, 10, {{3, 0, 0, 4, 5}, {4, 6, 6, 8, 8}})};
  const std::vector<SegmentationMap> background = {map_from(10, 10, {})};
  const auto classes = evaluated_classes();
  const auto acc = compute_pixel_accuracy(background, truth, classes);
  CHECK(acc.at(3) == 0.0);
  CHECK(acc.at(4) == 0.0);
  CHECK(!acc.at(2).has_value());

  // Half the car pixels correct (top 4x... rows 0..2 of 0..4 would be 3/5; use columns 0..2 of 0..4).
  const std::vector<SegmentationMap> half = {map_from(10, 10, {{3, 0, 0, 2, 5}, {4, 6, 6, 8, 8}})};
  CHECK(compute_pixel_accuracy(half, truth, classes).at(3).value() == 0.5);
}

TEST_CASE("absent classes are not applicable and skipped in means") {
  const std::vector<SegmentationMap> truth = {map_from(4, 4, {{3, 0, 0, 2, 2}})};
  const auto iou = compute_miou(truth, truth, evaluated_classes());
  CHECK(!iou.at(4).has_value());
  CHECK(mean_score(iou).value() == 1.0);
}

TEST_CASE("metric inputs must pair up") {
  const std::vector<SegmentationMap> a = {map_from(4, 4, {})};
  const std::vector<SegmentationMap> b = {map_from(4, 5, {})};
  const std::vector<int> cars = {3};
  CHECK_THROWS_AS(compute_miou(a, b, cars), DomainError);
}

TEST_CASE("scores stay in [0,1] on random maps") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> label(0, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SegmentationMap> pred, truth;
    for (int i = 0; i < 3; ++i) {
      SegmentationMap p{8, 8, std::vector<std::uint8_t>(64)};
      SegmentationMap t{8, 8, std::vector<std::uint8_t>(64)};
      for (auto& v : p.labels) v = static_cast<std::uint8_t>(label(rng));
      for (auto& v : t.labels) v = static_cast<std::uint8_t>(label(rng));
      pred.push_back(p);
      truth.push_back(t);
    }
    for (const auto& scores : {compute_miou(pred, truth, evaluated_classes(true)),
                               compute_pixel_accuracy(pred, truth, evaluated_classes(true))}) {
      for (const auto& [c, v] : scores) {
        if (v) CHECK((*v >= 0.0 && *v <= 1.0));
      }
    }
  }
}

TEST_CASE("evaluated classes exclude background and, by default, bus") {
  const auto classes = evaluated_classes();
  CHECK(std::find(classes.begin(), classes.end(), 0) == classes.end());
  CHECK(std::find(classes.begin(), classes.end(), 1) == classes.end());
  CHECK(classes.size() == 3);
}

TEST_CASE("random projection extractor is deterministic") {
  RgbImage img(20, 30);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i * 7);
  const RandomProjectionExtractor a(16, 3);
  const RandomProjectionExtractor b(16, 3);
  CHECK(a.embed(img) == b.embed(img));
  CHECK(a.embed(img).size() == 16);
}

TEST_CASE("report JSON never lists background") {
  EvalReport report;
  report.miou = {{3, 0.5}, {4, std::nullopt}, {2, 0.25}};
  report.accuracy = report.miou;
  const auto j = to_json(report);
  CHECK(!j["mIoU"].contains("background"));
  CHECK(j["mIoU"]["car"] == 0.5);
  CHECK(j["mIoU"]["person"].is_null());
  CHECK(j["mIoU"]["mean"] == doctest::Approx(0.375));
}
