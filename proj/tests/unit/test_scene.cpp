// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "sgsynth/error.hpp"
#include "sgsynth/scene.hpp"

using namespace sgsynth;

TEST_CASE("encode_time hits the cardinal points") {
  auto midnight = encode_time(0);
  CHECK(midnight.sin_component == doctest::Approx(0.0));
  CHECK(midnight.cos_component == doctest::Approx(1.0));

  auto six = encode_time(21600);
  CHECK(six.sin_component == doctest::Approx(1.0));
  CHECK(std::abs(six.cos_component) < 1e-12);

  auto eighteen = encode_time(64800);
  CHECK(eighteen.sin_component == doctest::Approx(-1.0));
  CHECK(std::abs(eighteen.cos_component) < 1e-12);
}

TEST_CASE("encode_time rejects out-of-range input") {
  CHECK_THROWS_AS(encode_time(-1.0), DomainError);
  CHECK_THROWS_AS(encode_time(86400.0), DomainError);
  CHECK_THROWS_AS(encode_time(std::nan("")), DomainError);
}

TEST_CASE("encode_time lies on the unit circle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 86400.0);
  for (int i = 0; i < 1000; ++i) {
    const auto t = encode_time(u(rng));
    CHECK(std::abs(t.sin_component * t.sin_component + t.cos_component * t.cos_component - 1.0) < 1e-9);
  }
}

TEST_CASE("parse_time_of_day") {
  CHECK(parse_time_of_day("00:00") == 0.0);
  CHECK(parse_time_of_day("14:00") == 50400.0);
  CHECK(parse_time_of_day("02:30:15") == 9015.0);
  CHECK_THROWS_AS(parse_time_of_day("24:00"), DomainError);
  CHECK_THROWS_AS(parse_time_of_day("noon"), DomainError);
  CHECK_THROWS_AS(parse_time_of_day("12:6x"), DomainError);
}

TEST_CASE("palette names round-trip and unknown names are rejected") {
  for (auto c : palette()) CHECK(parse_palette_color(to_string(c)) == c);
  try {
    parse_palette_color("purple");
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("palette") != std::string::npos);
  }
}

TEST_CASE("bbox validation") {
  CHECK_NOTHROW(validate(BBox{0.5, 0.5, 0.1, 0.2}));
  CHECK_THROWS_AS(validate(BBox{0.5, 0.5, 0.0, 0.2}), DomainError);
  CHECK_THROWS_AS(validate(BBox{1.5, 0.5, 0.1, 0.2}), DomainError);
}

TEST_CASE("entity validation rejects grid class") {
  SceneEntity e{EntityClass::Grid, {0.5, 0.5, 0.1, 0.1}, DiscreteColor{}};
  CHECK_THROWS_AS(validate(e), DomainError);
  e.entity_class = EntityClass::Person;
  CHECK_NOTHROW(validate(e));
}

TEST_CASE("color slots have the variant width") {
  CHECK(color_slots(DiscreteColor{PaletteColor::Blue}).size() == 8);
  CHECK(color_slots(DiscreteColor{PaletteColor::Blue})[4] == 1.0);
  const auto clusters = single_color_clusters(from_bytes(255, 0, 0));
  CHECK(color_slots(clusters).size() == 20);
  double total = 0;
  for (const auto& c : clusters.clusters) total += c.weight;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("segmentation labels follow background, bus, truck, car, person") {
  CHECK(segmentation_label(EntityClass::Bus) == 1);
  CHECK(segmentation_label(EntityClass::Truck) == 2);
  CHECK(segmentation_label(EntityClass::Car) == 3);
  CHECK(segmentation_label(EntityClass::Person) == 4);
  CHECK_THROWS_AS(segmentation_label(EntityClass::Grid), DomainError);
}
