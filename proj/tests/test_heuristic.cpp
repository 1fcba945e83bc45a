#include <doctest.h>

#include <cmath>
#include <random>

#include "gazelabel/heuristic.hpp"

using namespace gazelabel;

namespace {

void fill_disk(RgbImage& img, double cx, double cy, double r, Rgb c) {
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r) img.set(x, y, c);
}

constexpr Rgb kBrown{139, 69, 19};
constexpr Rgb kBlue{70, 80, 170};
constexpr Rgb kBackground{235, 228, 232};

}  // namespace

TEST_CASE("rgb_to_hsv on reference colours") {
  Hsv h = rgb_to_hsv({255, 0, 0});
  CHECK(h.h == 0.0);
  CHECK(h.s == 1.0);
  CHECK(h.v == 1.0);
  h = rgb_to_hsv({0, 255, 0});
  CHECK(h.h == doctest::Approx(120.0));
  h = rgb_to_hsv({0, 0, 255});
  CHECK(h.h == doctest::Approx(240.0));
  h = rgb_to_hsv({255, 0, 255});
  CHECK(h.h == doctest::Approx(300.0));
  h = rgb_to_hsv(kBrown);
  CHECK(h.h == doctest::Approx(25.0));
  CHECK(h.s == doctest::Approx(120.0 / 139.0));
  CHECK(h.v == doctest::Approx(139.0 / 255.0));
  h = rgb_to_hsv({128, 128, 128});
  CHECK(h.s == 0.0);
  CHECK(h.h == 0.0);
}

TEST_CASE("brown mask agrees with the per-pixel colour test") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> c(0, 255);
  RgbImage img(256, 256);
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 256; ++x)
      img.set(x, y, {static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng))});
  const HsvRange range;
  const Mask m = brown_mask(img, range);
  std::size_t hits = 0;
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 256; ++x) {
      const bool want = range.contains(rgb_to_hsv(img.at(x, y)));
      CHECK(m.at(x, y) == want);
      hits += want;
    }
  CHECK(hits > 0);
}

TEST_CASE("a brown disk is labelled at its centre, a blue one is not") {
  RgbImage img(300, 300, kBackground);
  fill_disk(img, 80, 90, 12, kBrown);
  fill_disk(img, 200, 200, 12, kBlue);
  const auto labels = detect_brown(img, {}, "x");
  REQUIRE(labels.size() == 1);
  CHECK(labels[0].x == doctest::Approx(80.0).epsilon(1e-6));
  CHECK(labels[0].y == doctest::Approx(90.0).epsilon(1e-6));
  CHECK(labels[0].image_id == "x");
  CHECK(labels[0].peak == 1.0);
}

TEST_CASE("brown specks below min_area are ignored") {
  RgbImage img(100, 100, kBackground);
  for (int y = 10; y < 19; ++y)
    for (int x = 10; x < 21; ++x) img.set(x, y, kBrown);  // 99 px
  for (int y = 50; y < 60; ++y)
    for (int x = 50; x < 60; ++x) img.set(x, y, kBrown);  // 100 px
  const auto labels = detect_brown(img, {}, "x");
  REQUIRE(labels.size() == 1);
  CHECK(labels[0].hotspot_area == 100);
  CHECK(labels[0].x == doctest::Approx(55.0));
}

TEST_CASE("an image without brown gives no labels") {
  CHECK(detect_brown(RgbImage(64, 64, kBackground), {}, "x").empty());
}

TEST_CASE("heuristic labels are translation equivariant") {
  RgbImage a(200, 200, kBackground), b(200, 200, kBackground);
  fill_disk(a, 50.5, 60.5, 9, kBrown);
  fill_disk(a, 120.5, 100.5, 7, {160, 100, 50});
  fill_disk(b, 50.5 + 37, 60.5 + 21, 9, kBrown);
  fill_disk(b, 120.5 + 37, 100.5 + 21, 7, {160, 100, 50});
  const auto la = detect_brown(a, {}, "a");
  const auto lb = detect_brown(b, {}, "b");
  REQUIRE(la.size() == 2);
  REQUIRE(lb.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(lb[i].x == doctest::Approx(la[i].x + 37));
    CHECK(lb[i].y == doctest::Approx(la[i].y + 21));
    CHECK(lb[i].hotspot_area == la[i].hotspot_area);
  }
}

TEST_CASE("a hue window can wrap through zero") {
  HsvRange r;
  r.hue_min = 350;
  r.hue_max = 20;
  CHECK(r.contains({355, 0.5, 0.5}));
  CHECK(r.contains({5, 0.5, 0.5}));
  CHECK_FALSE(r.contains({180, 0.5, 0.5}));
}

TEST_CASE("invalid colour windows are rejected") {
  HsvRange r;
  r.sat_min = 1.5;
  CHECK_THROWS_AS(r.validate(), ValidationError);
  r = {};
  r.val_min = 0.9;
  r.val_max = 0.1;
  CHECK_THROWS_AS(r.validate(), ValidationError);
  r = {};
  r.min_area = -1;
  CHECK_THROWS_AS(r.validate(), ValidationError);
}
