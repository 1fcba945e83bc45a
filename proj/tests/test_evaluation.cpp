#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "gazelabel/evaluation.hpp"
#include "support/exhaustive_matcher.hpp"

using namespace gazelabel;
using gazelabel::testing::exhaustive_match;

namespace {

std::vector<ImagePoint> random_points(std::mt19937_64& rng, int n, double extent) {
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<ImagePoint> out;
  for (int i = 0; i < n; ++i) out.push_back({u(rng), u(rng)});
  return out;
}

double brute_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t rows = cost.size(), cols = cost[0].size();
  std::vector<std::size_t> perm(cols);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double s = 0;
    for (std::size_t i = 0; i < rows; ++i) s += cost[i][perm[i]];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

GazePoint at(double x, double y, double t) {
  GazePoint p;
  p.t_ms = t;
  p.screen_x = x;
  p.screen_y = y;
  p.confidence = 1.0;
  p.valid = true;
  return p;
}

}  // namespace

TEST_CASE("matching pairs a prediction with its nearest admissible ground truth") {
  const std::vector<ImagePoint> pred{{0, 0}, {100, 100}};
  const std::vector<ImagePoint> gt{{3, 4}, {500, 500}};
  const MatchResult r = match_points(pred, gt, 30);
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.pairs[0].pred == 0);
  CHECK(r.pairs[0].gt == 0);
  CHECK(r.pairs[0].distance == 5.0);
  CHECK(r.fp == std::vector<std::size_t>{1});
  CHECK(r.fn == std::vector<std::size_t>{1});
}

TEST_CASE("a pair exactly at the radius matches") {
  const std::vector<ImagePoint> pred{{0, 0}};
  const std::vector<ImagePoint> gt{{30, 0}};
  CHECK(match_points(pred, gt, 30).pairs.size() == 1);
  CHECK(match_points(pred, gt, 29.999).pairs.empty());
}

TEST_CASE("matching prefers more pairs over a shorter single pair") {
  // Greedy nearest-first would pair p1-g0 and leave two points unmatched.
  const std::vector<ImagePoint> pred{{0, 0}, {20, 0}};
  const std::vector<ImagePoint> gt{{19, 0}, {45, 0}};
  const MatchResult r = match_points(pred, gt, 30);
  CHECK(r.pairs.size() == 2);
}

TEST_CASE("empty sides give the conventional metrics") {
  const std::vector<ImagePoint> none;
  const std::vector<ImagePoint> one{{1, 1}};
  MetricsReport m = prf(none, none, 30);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  m = prf(none, one, 30);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 0.0);
  CHECK(m.fn == 1);
  m = prf(one, none, 30);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 1.0);
  m = MetricsReport::from_counts(0, 3, 4);
  CHECK(m.f1 == 0.0);
  CHECK_THROWS_AS(match_points(one, one, 0.0), ValidationError);
}

TEST_CASE("matching agrees with exhaustive search on random small instances") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> n(0, 6);
  for (int trial = 0; trial < 300; ++trial) {
    const auto pred = random_points(rng, n(rng), 120);
    const auto gt = random_points(rng, n(rng), 120);
    const MatchResult r = match_points(pred, gt, 30);
    const auto best = exhaustive_match(pred, gt, 30);
    CHECK(r.pairs.size() == best.count);
    CHECK(r.total_distance() == doctest::Approx(best.total).epsilon(1e-9));
    CHECK(r.pairs.size() + r.fp.size() == pred.size());
    CHECK(r.pairs.size() + r.fn.size() == gt.size());
    for (const MatchPair& p : r.pairs) CHECK(p.distance <= 30.0);
  }
}

TEST_CASE("matching is symmetric in its two sides") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_points(rng, 1 + trial % 9, 200);
    const auto b = random_points(rng, 1 + (trial * 7) % 11, 200);
    const MatchResult ab = match_points(a, b, 30);
    const MatchResult ba = match_points(b, a, 30);
    CHECK(ab.pairs.size() == ba.pairs.size());
    CHECK(ab.total_distance() == doctest::Approx(ba.total_distance()).epsilon(1e-9));
    const MetricsReport m1 = prf(a, b, 30), m2 = prf(b, a, 30);
    CHECK(m1.precision == m2.recall);
    CHECK(m1.recall == m2.precision);
  }
}

TEST_CASE("assignment solver matches brute force") {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> u(-5.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + trial % 5, cols = rows + (trial / 5) % 3;
    std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
    for (auto& row : cost)
      for (double& c : row) c = u(rng);
    const auto assign = solve_assignment(cost);
    REQUIRE(assign.size() == rows);
    double s = 0;
    for (std::size_t i = 0; i < rows; ++i) s += cost[i][assign[i]];
    CHECK(std::set<std::size_t>(assign.begin(), assign.end()).size() == rows);
    CHECK(s == doctest::Approx(brute_assignment(cost)).epsilon(1e-12));
  }
}

TEST_CASE("pooled metrics add counts over images, including one-sided images") {
  PointsByImage pred{{"a", {{0, 0}, {100, 100}}}, {"b", {{5, 5}}}};
  PointsByImage gt{{"a", {{1, 1}}}, {"c", {{7, 7}}}};
  const MetricsReport m = prf_pooled(pred, gt, 30);
  CHECK(m.tp == 1);
  CHECK(m.fp == 2);
  CHECK(m.fn == 1);
  CHECK(m.precision == doctest::Approx(1.0 / 3));
  CHECK(m.recall == doctest::Approx(0.5));
}

TEST_CASE("recall never increases along a PR curve") {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> prob(0.0, 1.0);
  PointsByImage gt;
  std::vector<Detection> dets;
  for (int img = 0; img < 10; ++img) {
    const std::string id = "i" + std::to_string(img);
    gt[id] = random_points(rng, 3, 500);
    for (const ImagePoint& p : random_points(rng, 6, 500)) dets.push_back({id, p.x, p.y, prob(rng)});
    for (const ImagePoint& g : gt[id]) dets.push_back({id, g.x + 3, g.y - 2, prob(rng)});
  }
  std::vector<double> ts;
  for (int i = 0; i <= 20; ++i) ts.push_back(i / 20.0);
  const auto curve = pr_curve(dets, gt, 30, ts);
  REQUIRE(curve.size() == ts.size());
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].recall <= curve[i - 1].recall);
  CHECK(curve.front().recall == 1.0);
  std::reverse(ts.begin(), ts.end());
  CHECK_THROWS_AS(pr_curve(dets, gt, 30, ts), ValidationError);
}

TEST_CASE("describe gives sample std and linear quartiles") {
  const Stats s = describe({4, 1, 3, 2});
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(1.2909944487358056));
  CHECK(s.q1 == doctest::Approx(1.75));
  CHECK(s.median == doctest::Approx(2.5));
  CHECK(s.q3 == doctest::Approx(3.25));
  CHECK(s.iqr() == doctest::Approx(1.5));
  const Stats one = describe({7});
  CHECK(one.std == 0.0);
  CHECK(one.iqr() == 0.0);
}

TEST_CASE("a sweep over unanimous observers is perfect at every k") {
  std::mt19937_64 rng(113);
  std::normal_distribution<double> noise(0.0, 4.0);
  std::vector<GazeSequence> seqs;
  for (int p = 0; p < 4; ++p)
    for (const std::string img : {"a", "b"}) {
      GazeSequence s;
      s.participant_id = "P" + std::to_string(p);
      s.image_id = img;
      s.display.image_id = img;
      const double c = img == "a" ? 400 : 900;
      for (int i = 0; i < 30; ++i) s.points.push_back(at(c + noise(rng), c + noise(rng), i * 16.0));
      seqs.push_back(s);
    }
  const PointsByImage gt{{"a", {{400, 400}}}, {"b", {{900, 900}}}};
  SweepOptions opt;
  opt.k_values = {1, 2, 3, 4};
  opt.n_runs = 3;
  opt.seed = 4;
  const SweepTable t = group_size_sweep(group_by_image(seqs), gt, opt);
  CHECK(t.rows.size() == 12);
  for (const SweepRow& r : t.rows) {
    CHECK(r.error.empty());
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.participants.size() == static_cast<std::size_t>(r.k));
  }
  CHECK(t.at_k(3).runs == 3);
  CHECK(group_size_sweep(group_by_image(seqs), gt, opt).rows.size() == 12);

  opt.k_values = {5};
  CHECK_THROWS_AS(group_size_sweep(group_by_image(seqs), gt, opt), ValidationError);
}
