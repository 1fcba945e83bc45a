#include "gazelabel/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <tuple>

#include "gazelabel/random.hpp"

namespace gazelabel {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kEdgeMargin = 40;
constexpr double kMinSeparation = 100.0;

enum Stream : std::uint64_t { kLayout = 1, kRender = 2, kGaze = 3, kSalience = 4 };

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

int poisson(Rng& rng, double mean) { return mean > 0.0 ? std::poisson_distribution<int>(mean)(rng) : 0; }

bool bernoulli(Rng& rng, double p) { return uniform(rng, 0.0, 1.0) < p; }

// Layouts built by hand may omit salience; treat such objects as fully salient.
double salience(const std::vector<double>& s, std::size_t j) { return j < s.size() ? s[j] : 1.0; }

std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

// Cheap triangular noise in [-amp, amp] from two random bytes.
double byte_noise(std::uint64_t bits, int shift, double amp) {
  const int a = static_cast<int>((bits >> shift) & 0xff), b = static_cast<int>((bits >> (shift + 8)) & 0xff);
  return (a + b - 255) / 255.0 * amp;
}

void paint_noisy(RgbImage& img, int x, int y, const double base[3], double amp, Rng& rng) {
  const std::uint64_t bits = rng();
  img.set(x, y, {clamp8(base[0] + byte_noise(bits, 0, amp)), clamp8(base[1] + byte_noise(bits, 16, amp)),
                 clamp8(base[2] + byte_noise(bits, 32, amp))});
}

void paint_ellipse(RgbImage& img, ImagePoint c, double a, double b, double angle, const double color[3], double amp,
                   Rng& rng) {
  const double ca = std::cos(angle), sa = std::sin(angle);
  const double r = std::max(a, b);
  const int x0 = std::max(0, static_cast<int>(c.x - r - 1)), x1 = std::min(img.width() - 1, static_cast<int>(c.x + r + 1));
  const int y0 = std::max(0, static_cast<int>(c.y - r - 1)), y1 = std::min(img.height() - 1, static_cast<int>(c.y + r + 1));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - c.x, dy = y + 0.5 - c.y;
      const double u = (dx * ca + dy * sa) / a, v = (-dx * sa + dy * ca) / b;
      if (u * u + v * v <= 1.0) paint_noisy(img, x, y, color, amp, rng);
    }
}

std::vector<ImagePoint> place_objects(Rng& rng, ImageSize size, int count, std::vector<ImagePoint>& taken) {
  std::vector<ImagePoint> out;
  for (int i = 0; i < count; ++i) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      const ImagePoint p{uniform(rng, kEdgeMargin, size.w - kEdgeMargin), uniform(rng, kEdgeMargin, size.h - kEdgeMargin)};
      const bool clear = std::none_of(taken.begin(), taken.end(), [&](const ImagePoint& q) {
        return std::hypot(p.x - q.x, p.y - q.y) < kMinSeparation;
      });
      if (!clear) continue;
      taken.push_back(p);
      out.push_back(p);
      break;
    }
  }
  return out;
}

}  // namespace

void SlideSpec::validate() const {
  if (n_images < 0) throw ValidationError("n_images must be >= 0");
  if (image_size < 2 * kEdgeMargin + 1) throw ValidationError("image_size too small");
  if (!(mitosis_rate >= 0.0) || !(distractor_rate >= 0.0) || !(nuclei_density >= 0.0))
    throw ValidationError("slide rates must be >= 0");
  if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0)) throw ValidationError("positive_fraction must lie in [0, 1]");
  if (!(mimic_fraction >= 0.0 && mimic_fraction <= 1.0)) throw ValidationError("mimic_fraction must lie in [0, 1]");
}

std::string image_id_for(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%04d", index);
  return buf;
}

std::vector<SlideLayout> layout_slide(const SlideSpec& spec) {
  spec.validate();
  const int n = spec.n_images;
  const int n_pos = static_cast<int>(std::lround(n * spec.positive_fraction));
  std::vector<char> positive(n, 0);
  std::fill(positive.begin(), positive.begin() + n_pos, 1);
  Rng order(derive_seed(spec.seed, kLayout, 0xffffffff));
  for (int i = n; i > 1; --i) std::swap(positive[i - 1], positive[uniform_index(order, static_cast<std::uint64_t>(i))]);

  std::vector<SlideLayout> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(spec.seed, kLayout, static_cast<std::uint64_t>(i)));
    SlideLayout l;
    l.image_id = image_id_for(i);
    l.index = i;
    l.size = {spec.image_size, spec.image_size};
    l.positive = positive[i] != 0;
    const int n_mit = (l.positive && spec.mitosis_rate > 0.0) ? 1 + poisson(rng, std::max(0.0, spec.mitosis_rate - 1.0)) : 0;
    const int n_dis = poisson(rng, spec.distractor_rate);
    std::vector<ImagePoint> taken;
    l.mitoses = place_objects(rng, l.size, n_mit, taken);
    l.distractors = place_objects(rng, l.size, n_dis, taken);
    Rng sal(derive_seed(spec.seed, kSalience, static_cast<std::uint64_t>(i)));
    for (std::size_t j = 0; j < l.mitoses.size(); ++j) l.mitosis_salience.push_back(uniform(sal, 0.4, 1.0));
    for (std::size_t j = 0; j < l.distractors.size(); ++j)
      l.distractor_salience.push_back(bernoulli(sal, spec.mimic_fraction) ? uniform(sal, 0.7, 1.0) : uniform(sal, 0.0, 0.5));
    out.push_back(std::move(l));
  }
  return out;
}

RgbImage render_image(const SlideSpec& spec, const SlideLayout& layout) {
  Rng rng(derive_seed(spec.seed, kRender, static_cast<std::uint64_t>(layout.index)));
  const int w = layout.size.w, h = layout.size.h;
  RgbImage img(w, h);

  static constexpr double background[3] = {232.0, 226.0, 234.0};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) paint_noisy(img, x, y, background, 6.0, rng);

  const int n_nuclei = poisson(rng, spec.nuclei_density * w * static_cast<double>(h) / 1e6);
  static constexpr double nucleus[3] = {122.0, 124.0, 178.0};
  for (int i = 0; i < n_nuclei; ++i) {
    const ImagePoint c{uniform(rng, 0, w), uniform(rng, 0, h)};
    paint_ellipse(img, c, uniform(rng, 5, 9), uniform(rng, 4, 7), uniform(rng, 0, kPi), nucleus, 10.0, rng);
  }

  // Mitoses darken with salience; gaze-drawing distractors ("mimics") are a
  // darker brown than ordinary artifacts but lighter than any mitosis.
  static constexpr std::array<double, 3> dark{92.0, 55.0, 32.0};
  static constexpr std::array<double, 3> faint{110.0, 68.0, 40.0};
  static constexpr std::array<double, 3> artifact{176.0, 116.0, 62.0};
  static constexpr std::array<double, 3> mimic{120.0, 75.0, 42.0};
  auto lerp = [](const std::array<double, 3>& a, const std::array<double, 3>& b, double t) {
    return std::array<double, 3>{a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
  };
  for (std::size_t j = 0; j < layout.mitoses.size(); ++j) {
    const double t = std::clamp((salience(layout.mitosis_salience, j) - 0.4) / 0.6, 0.0, 1.0);
    const auto color = lerp(faint, dark, t);
    paint_ellipse(img, layout.mitoses[j], uniform(rng, 9, 12), uniform(rng, 7, 10), uniform(rng, 0, kPi), color.data(), 8.0, rng);
  }

  for (std::size_t j = 0; j < layout.distractors.size(); ++j) {
    const ImagePoint c = layout.distractors[j];
    const auto color = salience(layout.distractor_salience, j) > 0.6 ? mimic : artifact;
    const int lumps = 3 + static_cast<int>(uniform_index(rng, 3));
    for (int l = 0; l < lumps; ++l) {
      const double r = uniform(rng, 4.5, 7.5);
      const ImagePoint lc{c.x + uniform(rng, -7, 7), c.y + uniform(rng, -7, 7)};
      paint_ellipse(img, lc, r, r, 0.0, color.data(), 8.0, rng);
    }
  }
  return img;
}

std::vector<SlideImage> gen_slide(const SlideSpec& spec) {
  std::vector<SlideImage> out;
  for (SlideLayout& l : layout_slide(spec)) {
    RgbImage img = render_image(spec, l);
    out.push_back({std::move(l), std::move(img)});
  }
  return out;
}

void ObserverModel::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(hit_rate) || !prob(distractor_attraction) || !prob(dropout))
    throw ValidationError("observer " + id + ": probabilities must lie in [0, 1]");
  if (!(sample_rate > 0.0)) throw ValidationError("observer " + id + ": sample_rate must be > 0");
  if (!(dwell_ms >= 0.0) || !(false_dwell_ms >= 0.0) || !(dwell_spread >= 0.0) || !(dispersion >= 0.0) ||
      !(false_fixations >= 0.0))
    throw ValidationError("observer " + id + ": dwell, dispersion and false_fixations must be >= 0");
}

std::vector<ObserverModel> default_observers(int n, const ObserverModel& base) {
  if (n < 1) throw ValidationError("default_observers: n must be >= 1");
  std::vector<ObserverModel> out;
  for (int i = 0; i < n; ++i) {
    ObserverModel o = base;
    char buf[16];
    std::snprintf(buf, sizeof buf, "P%02d", i + 1);
    o.id = buf;
    // Each trait is spread evenly over its range, with a different stride
    // per trait so that one observer is not uniformly good or bad.
    auto spread = [&](int stride) { return n > 1 ? static_cast<double>((i * stride) % n) / (n - 1) : 0.5; };
    o.hit_rate = std::min(1.0, base.hit_rate * (0.6 + 0.5 * spread(1)));
    o.distractor_attraction = std::min(1.0, base.distractor_attraction * (0.5 + 1.0 * spread(3)));
    o.dwell_ms = base.dwell_ms * (0.6 + 0.8 * spread(5));
    o.dispersion = base.dispersion * (0.8 + 0.4 * spread(9));
    o.validate();
    out.push_back(o);
  }
  return out;
}

std::vector<GazeSequence> gen_gaze(std::span<const SlideLayout> layouts, std::span<const ObserverModel> observers,
                                   std::uint64_t seed, const GazeSimOptions& options) {
  if (options.screen_w <= 0 || options.screen_h <= 0) throw ValidationError("screen size must be positive");
  for (const ObserverModel& o : observers) o.validate();

  static constexpr int kRotations[4] = {0, 90, 180, 270};
  static constexpr Flip kFlips[3] = {Flip::none, Flip::horizontal, Flip::vertical};

  std::vector<GazeSequence> out;
  out.reserve(layouts.size() * observers.size());
  for (std::size_t oi = 0; oi < observers.size(); ++oi) {
    const ObserverModel& obs = observers[oi];
    for (const SlideLayout& l : layouts) {
      Rng rng(derive_seed(seed ^ kGaze, oi + 1, static_cast<std::uint64_t>(l.index) + 1));
      GazeSequence seq;
      seq.participant_id = obs.id;
      seq.image_id = l.image_id;

      DisplayRecord& d = seq.display;
      d.image_id = l.image_id;
      d.participant_id = obs.id;
      d.image_size = l.size;
      const int rot = kRotations[uniform_index(rng, 4)];
      const Flip flip = kFlips[uniform_index(rng, 3)];
      d.rotation = options.fixed_rotation.value_or(rot);
      d.flip = options.fixed_flip.value_or(flip);
      const ImageSize ds = d.displayed_size();
      d.viewport.scale = std::min(static_cast<double>(options.screen_w) / ds.w, static_cast<double>(options.screen_h) / ds.h);
      d.viewport.origin_x = (options.screen_w - d.viewport.scale * ds.w) / 2.0;
      d.viewport.origin_y = (options.screen_h - d.viewport.scale * ds.h) / 2.0;
      d.validate();

      struct Fixation {
        ImagePoint at;
        double ms;
      };
      std::lognormal_distribution<double> duration(-0.5 * obs.dwell_spread * obs.dwell_spread, obs.dwell_spread);
      std::vector<Fixation> fixations;
      for (std::size_t j = 0; j < l.mitoses.size(); ++j)
        if (bernoulli(rng, obs.hit_rate * salience(l.mitosis_salience, j)))
          fixations.push_back({l.mitoses[j], obs.dwell_ms * duration(rng)});
      for (std::size_t j = 0; j < l.distractors.size(); ++j)
        if (bernoulli(rng, obs.distractor_attraction * salience(l.distractor_salience, j)))
          fixations.push_back({l.distractors[j], obs.dwell_ms * duration(rng)});
      const int n_false = poisson(rng, obs.false_fixations);
      for (int i = 0; i < n_false; ++i)
        fixations.push_back({{uniform(rng, 0, l.size.w), uniform(rng, 0, l.size.h)}, obs.false_dwell_ms * duration(rng)});
      for (std::size_t i = fixations.size(); i > 1; --i) std::swap(fixations[i - 1], fixations[uniform_index(rng, i)]);

      std::normal_distribution<double> noise(0.0, 1.0);
      int sample = 0;
      for (const Fixation& f : fixations) {
        const int n_samples = std::max(1, static_cast<int>(std::lround(f.ms * obs.sample_rate / 1000.0)));
        for (int s = 0; s < n_samples; ++s, ++sample) {
          GazePoint gp;
          gp.t_ms = sample * 1000.0 / obs.sample_rate;
          const ImagePoint ip{f.at.x + obs.dispersion * noise(rng), f.at.y + obs.dispersion * noise(rng)};
          const ImagePoint sp = image_to_screen(ip, d);
          if (bernoulli(rng, obs.dropout)) {
            if (bernoulli(rng, 0.5)) {
              gp.valid = false;  // tracker reported N/A
            } else {
              gp.screen_x = sp.x;
              gp.screen_y = sp.y;
              gp.confidence = uniform(rng, 0.0, 0.4);
              gp.valid = true;
            }
          } else {
            gp.screen_x = sp.x;
            gp.screen_y = sp.y;
            gp.confidence = uniform(rng, 0.6, 1.0);
            gp.valid = true;
          }
          seq.points.push_back(gp);
        }
      }
      out.push_back(std::move(seq));
    }
  }
  std::sort(out.begin(), out.end(), [](const GazeSequence& a, const GazeSequence& b) {
    return std::tie(a.image_id, a.participant_id) < std::tie(b.image_id, b.participant_id);
  });
  return out;
}

}  // namespace gazelabel
