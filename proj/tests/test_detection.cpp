#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "gazelabel/detection.hpp"
#include "gazelabel/evaluation.hpp"
#include "gazelabel/reference_classifier.hpp"
#include "support/oracle_classifier.hpp"

using namespace gazelabel;
using gazelabel::testing::OracleClassifier;

namespace {

RgbImage noisy_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> c(0, 255);
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.set(x, y, {static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng))});
  return img;
}

void fill_disk(RgbImage& img, double cx, double cy, double r, Rgb c) {
  for (int y = std::max(0, int(cy - r) - 1); y < std::min(img.height(), int(cy + r) + 2); ++y)
    for (int x = std::max(0, int(cx - r) - 1); x < std::min(img.width(), int(cx + r) + 2); ++x)
      if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r) img.set(x, y, c);
}

}  // namespace

TEST_CASE("a 1600 square image gives 23 offsets per axis and 529 windows") {
  const auto offs = window_offsets(1600, 240, 60);
  REQUIRE(offs.size() == 23);
  CHECK(offs.front() == 0);
  CHECK(offs.back() == 1360);
  CHECK(sliding_windows({1600, 1600}, 240, 60).size() == 529);
}

TEST_CASE("an image exactly one patch wide gives one window") {
  CHECK(window_offsets(240, 240, 60) == std::vector<int>{0});
  CHECK(sliding_windows({240, 240}, 240, 60).size() == 1);
  CHECK_THROWS_AS(window_offsets(239, 240, 60), ValidationError);
}

TEST_CASE("window offsets cover the extent without gaps or overflow") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> patch_d(1, 300);
  for (int trial = 0; trial < 2000; ++trial) {
    const int patch = patch_d(rng);
    const int stride = std::uniform_int_distribution<int>(1, patch)(rng);
    const int extent = patch + std::uniform_int_distribution<int>(0, 2000)(rng);
    const auto offs = window_offsets(extent, patch, stride);
    REQUIRE(!offs.empty());
    CHECK(offs.front() == 0);
    CHECK(offs.back() == extent - patch);
    // Only the final step may exceed the stride, and never by enough to
    // leave pixels uncovered.
    for (std::size_t i = 1; i < offs.size(); ++i) {
      CHECK(offs[i] > offs[i - 1]);
      if (i + 1 < offs.size()) CHECK(offs[i] - offs[i - 1] == stride);
      CHECK(offs[i] - offs[i - 1] <= patch);
    }
  }
}

TEST_CASE("centred windows are clamped inside the image") {
  CHECK(centered_window({800, 800}, {1600, 1600}, 240) == Rect{680, 680, 240, 240});
  CHECK(centered_window({5, 1590}, {1600, 1600}, 240) == Rect{0, 1360, 240, 240});
}

TEST_CASE("extract_locations with a non-positive threshold yields nothing") {
  ScalarField f(10, 10);
  CHECK(extract_locations(f, 0.0, 0).empty());
  f.at(3, 3) = 1.0;
  CHECK(extract_locations(f, -1.0, 0).empty());
  const auto pts = extract_locations(f, 0.5, 0);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].x == 3.5);
  CHECK(pts[0].y == 3.5);
}

TEST_CASE("occlusion saliency is zero outside every box and peaks on the object") {
  RgbImage img(480, 480, {200, 200, 200});
  OracleClassifier oracle;
  oracle.plant(img, {{130, 150}});
  const std::vector<ScoredBox> boxes{{{60, 60, 240, 240}, 1.0}};
  const ScalarField f = OcclusionSaliency(40, 20).saliency(img, boxes, oracle);
  for (int y = 0; y < 480; ++y)
    for (int x = 0; x < 480; ++x) {
      if (!boxes[0].box.contains(x, y)) CHECK(f.at(x, y) == 0.0);
      CHECK(f.at(x, y) >= 0.0);
      CHECK(f.at(x, y) <= 1.0);
    }
  CHECK(f.at(130, 150) == 1.0);
  CHECK(f.at(250, 250) == 0.0);
}

TEST_CASE("the pipeline finds planted objects with a perfect classifier") {
  RgbImage img(1600, 1600, {230, 225, 230});
  const std::vector<ImagePoint> centres{{300, 310}, {1210, 415}, {777, 1333}, {20, 1580}};
  OracleClassifier oracle;
  oracle.plant(img, centres);
  const auto dets = detect(img, "x", oracle, {});
  REQUIRE(dets.size() == centres.size());
  std::vector<ImagePoint> pts;
  for (const Detection& d : dets) {
    CHECK(d.probability == 1.0);
    pts.push_back({d.x, d.y});
  }
  const MetricsReport m = prf(pts, centres, 30.0);
  CHECK(m.recall == 1.0);
  CHECK(m.precision == 1.0);
}

TEST_CASE("the pipeline returns nothing when no window is positive") {
  RgbImage img(480, 480);
  OracleClassifier oracle;
  CHECK(detect(img, "x", oracle, {}).empty());
}

TEST_CASE("invalid pipeline parameters are rejected") {
  PipelineParams p;
  p.stride = 0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.occlusion_size = 500;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.hotspot_fraction = 0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("log-loss gradient matches central finite differences") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int dim = 16;
    std::vector<double> w(dim), x(dim), g(dim);
    for (int i = 0; i < dim; ++i) {
      w[i] = n(rng);
      x[i] = n(rng);
    }
    const double b = n(rng);
    const int y = trial % 2;
    const double l2 = 0.1 * trial;
    const double gb = log_loss_gradient(w, b, x, y, l2, g);
    const double h = 1e-6;
    for (int i = 0; i < dim; ++i) {
      std::vector<double> wp = w, wm = w;
      wp[i] += h;
      wm[i] -= h;
      const double fd = (log_loss(wp, b, x, y, l2) - log_loss(wm, b, x, y, l2)) / (2 * h);
      CHECK(std::abs(fd - g[i]) <= 1e-4 * std::max(1e-3, std::abs(fd)));
    }
    const double fdb = (log_loss(w, b + h, x, y, l2) - log_loss(w, b - h, x, y, l2)) / (2 * h);
    CHECK(std::abs(fdb - gb) <= 1e-4 * std::max(1e-3, std::abs(fdb)));
  }
}

TEST_CASE("histogram features are L1 normalised and honour occlusion") {
  const RgbImage img = noisy_image(100, 80, 2);
  const PatchView plain{{10, 5, 60, 60}, std::nullopt};
  const auto f = ReferenceClassifier::features(img, plain);
  REQUIRE(f.size() == 512);
  double s = 0;
  for (double v : f) s += v;
  CHECK(s == doctest::Approx(1.0));

  RgbImage painted = img;
  const Rgb fill{10, 200, 30};
  for (int y = 20; y < 40; ++y)
    for (int x = 30; x < 50; ++x) painted.set(x, y, fill);
  const PatchView occluded{{10, 5, 60, 60}, Occlusion{{30, 20, 20, 20}, fill}};
  const auto fo = ReferenceClassifier::features(img, occluded);
  const auto fp = ReferenceClassifier::features(painted, plain);
  for (std::size_t i = 0; i < fo.size(); ++i) CHECK(fo[i] == doctest::Approx(fp[i]).epsilon(1e-12));
  CHECK_THROWS_AS(ReferenceClassifier::features(img, {{50, 50, 60, 60}, std::nullopt}), ValidationError);
}

TEST_CASE("batch scoring equals one-by-one scoring") {
  const RgbImage img = noisy_image(300, 260, 4);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<double> w(512);
  for (double& v : w) v = n(rng);
  ReferenceClassifier clf;
  clf.set_parameters(w, 0.3);
  std::vector<PatchView> views;
  for (int y = 0; y + 120 <= 260; y += 35)
    for (int x = 0; x + 120 <= 300; x += 45) {
      views.push_back({{x, y, 120, 120}, std::nullopt});
      views.push_back({{x, y, 120, 120}, Occlusion{{x + 20, y + 40, 40, 40}, {90, 60, 40}}});
    }
  const auto batch = clf.classify_batch(img, views);
  REQUIRE(batch.size() == views.size());
  for (std::size_t i = 0; i < views.size(); ++i) CHECK(batch[i] == doctest::Approx(clf.classify(img, views[i])).epsilon(1e-9));
  const std::vector<PatchView> inner{{{70, 90, 120, 120}, Occlusion{{100, 100, 40, 40}, {90, 60, 40}}},
                                     {{150, 100, 120, 120}, std::nullopt}};
  const auto part = clf.classify_batch(img, inner);
  for (std::size_t i = 0; i < inner.size(); ++i) CHECK(part[i] == doctest::Approx(clf.classify(img, inner[i])).epsilon(1e-9));
}

TEST_CASE("classifier save and load round trip exactly") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> w(512);
  for (double& v : w) v = n(rng) * 1e3;
  ReferenceClassifier clf;
  clf.set_parameters(w, -0.123456789012345678);
  std::stringstream ss;
  clf.save(ss);
  const ReferenceClassifier back = ReferenceClassifier::load(ss);
  CHECK(back == clf);

  std::istringstream bad("something else\n513\n");
  CHECK_THROWS_AS(ReferenceClassifier::load(bad), ValidationError);
  std::stringstream truncated;
  clf.save(truncated);
  const std::string text = truncated.str();
  std::istringstream cut(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(ReferenceClassifier::load(cut), ValidationError);
}

TEST_CASE("fitting separates brown-spot patches from plain ones, deterministically") {
  std::vector<RgbImage> images;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(30.0, 90.0);
  for (int i = 0; i < 40; ++i) {
    RgbImage img(120, 120, {228, 222, 230});
    fill_disk(img, u(rng), u(rng), 8, {80, 100, 170});
    if (i % 2 == 0) fill_disk(img, u(rng), u(rng), 14, {110, 68, 40});
    images.push_back(std::move(img));
  }
  std::vector<LabeledPatch> samples;
  for (int i = 0; i < 40; ++i) samples.push_back({&images[i], {{0, 0, 120, 120}, std::nullopt}, i % 2 == 0 ? 1 : 0});
  int epochs_seen = 0;
  ReferenceClassifier a, b;
  a.fit(samples, {}, 5, [&](int, const PatchClassifier&) { ++epochs_seen; });
  b.fit(samples, {}, 5, nullptr);
  CHECK(epochs_seen == FitOptions{}.epochs);
  CHECK(a == b);
  for (int i = 0; i < 40; ++i) {
    const double p = a.classify(images[i], samples[i].patch);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    if (i % 2 == 0)
      CHECK(p > 0.5);
    else
      CHECK(p < 0.5);
  }
}
