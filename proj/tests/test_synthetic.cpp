#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "gazelabel/evaluation.hpp"
#include "gazelabel/heuristic.hpp"
#include "gazelabel/synthetic.hpp"

using namespace gazelabel;

namespace {

SlideSpec small_spec(std::uint64_t seed = 7) {
  SlideSpec spec;
  spec.n_images = 20;
  spec.image_size = 600;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("layout has the requested positive count and consistent objects") {
  const SlideSpec spec = small_spec();
  const auto layouts = layout_slide(spec);
  REQUIRE(layouts.size() == 20);
  int positives = 0;
  std::set<std::string> ids;
  for (const SlideLayout& l : layouts) {
    ids.insert(l.image_id);
    positives += l.positive;
    CHECK(l.positive == !l.mitoses.empty());
    CHECK(l.mitosis_salience.size() == l.mitoses.size());
    CHECK(l.distractor_salience.size() == l.distractors.size());
    for (double s : l.mitosis_salience) {
      CHECK(s >= 0.4);
      CHECK(s <= 1.0);
    }
    for (double s : l.distractor_salience) {
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
    for (const ImagePoint& p : l.mitoses) CHECK(on_image(p, l.size));
    for (const ImagePoint& p : l.distractors) CHECK(on_image(p, l.size));
  }
  CHECK(positives == 10);
  CHECK(ids.size() == 20);
  CHECK(layouts[3].image_id == "img_0003");
}

TEST_CASE("the same seed gives the same slide and gaze, a different seed does not") {
  const SlideSpec spec = small_spec();
  const auto a = gen_slide(spec);
  const auto b = gen_slide(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].image == b[i].image);
    CHECK(a[i].layout.mitoses == b[i].layout.mitoses);
  }
  const auto c = layout_slide(small_spec(8));
  bool differs = false;
  for (std::size_t i = 0; i < c.size(); ++i) differs |= c[i].mitoses != a[i].layout.mitoses;
  CHECK(differs);

  const auto layouts = layout_slide(spec);
  const auto observers = default_observers(3);
  CHECK(gen_gaze(layouts, observers, 5) == gen_gaze(layouts, observers, 5));
  CHECK(gen_gaze(layouts, observers, 5) != gen_gaze(layouts, observers, 6));
}

TEST_CASE("every rendered mitosis is brown enough for the colour heuristic") {
  const auto slide = gen_slide(small_spec(11));
  PointsByImage gt, found;
  for (const SlideImage& s : slide) {
    if (!s.layout.mitoses.empty()) gt[s.layout.image_id] = s.layout.mitoses;
    for (const ConsensusLabel& l : detect_brown(s.image, {}, s.layout.image_id)) found[l.image_id].push_back({l.x, l.y});
  }
  CHECK(prf_pooled(found, gt, 30).recall == 1.0);
}

TEST_CASE("one gaze sequence per observer and image, all landing on the image") {
  const auto layouts = layout_slide(small_spec());
  const auto observers = default_observers(4);
  const auto seqs = gen_gaze(layouts, observers, 3);
  CHECK(seqs.size() == layouts.size() * observers.size());
  std::set<std::pair<std::string, std::string>> keys;
  for (const GazeSequence& s : seqs) {
    keys.insert({s.participant_id, s.image_id});
    CHECK(s.display.image_id == s.image_id);
    CHECK(s.display.image_size == ImageSize{600, 600});
    CHECK(std::is_sorted(s.points.begin(), s.points.end(),
                         [](const GazePoint& a, const GazePoint& b) { return a.t_ms < b.t_ms; }));
    const GazeSequence f = filter_points(s, 0.5);
    CHECK(f.points.size() <= s.points.size());
    for (const ImagePoint& p : project_sequence(f)) CHECK(on_image(p, s.display.image_size));
  }
  CHECK(keys.size() == seqs.size());
}

TEST_CASE("observers without dropout give only valid, confident samples near their targets") {
  SlideSpec spec = small_spec();
  spec.mimic_fraction = 0.0;
  spec.distractor_rate = 0.0;
  const auto layouts = layout_slide(spec);
  ObserverModel o;
  o.id = "P00";
  o.dropout = 0.0;
  o.false_fixations = 0.0;
  o.hit_rate = 1.0;
  o.dispersion = 5.0;
  GazeSimOptions opt;
  opt.fixed_rotation = 90;
  opt.fixed_flip = Flip::horizontal;
  const auto seqs = gen_gaze(layouts, std::vector<ObserverModel>{o}, 1, opt);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const GazeSequence& s = seqs[i];
    CHECK(s.display.rotation == 90);
    CHECK(s.display.flip == Flip::horizontal);
    for (const GazePoint& p : s.points) {
      CHECK(p.usable());
      CHECK(*p.confidence >= 0.5);
    }
    for (const ImagePoint& p : project_sequence(filter_points(s, 0.5))) {
      double nearest = 1e9;
      for (const ImagePoint& m : layouts[i].mitoses) nearest = std::min(nearest, std::hypot(p.x - m.x, p.y - m.y));
      CHECK(nearest < 40.0);
    }
  }
}

TEST_CASE("default observers are distinct and vary around the base") {
  const auto obs = default_observers(14);
  REQUIRE(obs.size() == 14);
  std::set<std::string> ids;
  std::set<double> hit, attraction;
  for (const ObserverModel& o : obs) {
    o.validate();
    ids.insert(o.id);
    hit.insert(o.hit_rate);
    attraction.insert(o.distractor_attraction);
  }
  CHECK(ids.size() == 14);
  CHECK(hit.size() > 1);
  CHECK(attraction.size() > 1);
}

TEST_CASE("invalid simulation settings are rejected") {
  SlideSpec spec;
  spec.positive_fraction = 1.5;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = {};
  spec.mimic_fraction = -0.1;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  ObserverModel o;
  o.hit_rate = 2;
  CHECK_THROWS_AS(o.validate(), ValidationError);
  o = {};
  o.sample_rate = 0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
}
