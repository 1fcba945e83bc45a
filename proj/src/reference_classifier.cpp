#include "gazelabel/reference_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "gazelabel/heuristic.hpp"
#include "gazelabel/random.hpp"

namespace gazelabel {

namespace {

constexpr const char* kHeader = "gazelabel-reference-classifier v1";

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::optional<Rect> intersect(const Rect& a, const Rect& b) {
  const int x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.x + a.w, b.x + b.w), y1 = std::min(a.y + a.h, b.y + b.h);
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return Rect{x0, y0, x1 - x0, y1 - y0};
}

void check_window(const RgbImage& image, const Rect& r) {
  if (r.w <= 0 || r.h <= 0 || r.x < 0 || r.y < 0 || r.x + r.w > image.width() || r.y + r.h > image.height())
    throw ValidationError("patch window outside image");
}

}  // namespace

double log_loss(std::span<const double> w, double b, std::span<const double> x, int y, double l2) {
  const double z = dot(w, x) + b;
  return softplus(z) - y * z + 0.5 * l2 * dot(w, w);
}

double log_loss_gradient(std::span<const double> w, double b, std::span<const double> x, int y, double l2,
                         std::span<double> grad_w) {
  const double g = sigmoid(dot(w, x) + b) - y;
  for (std::size_t i = 0; i < w.size(); ++i) grad_w[i] = g * x[i] + l2 * w[i];
  return g;
}

ReferenceClassifier::ReferenceClassifier() : weights_(kFeatures, 0.0) {}

namespace {

int compute_bin(Rgb c) {
  const Hsv hsv = rgb_to_hsv(c);
  constexpr int kB = ReferenceClassifier::kBinsPerChannel;
  const int hb = std::min(kB - 1, static_cast<int>(hsv.h / (360.0 / kB)));
  const int sb = std::min(kB - 1, static_cast<int>(hsv.s * kB));
  const int vb = std::min(kB - 1, static_cast<int>(hsv.v * kB));
  return (hb * kB + sb) * kB + vb;
}

// Bin of every 24-bit colour, built on first use.
const std::vector<std::uint16_t>& bin_table() {
  static const std::vector<std::uint16_t> table = [] {
    std::vector<std::uint16_t> t(std::size_t{1} << 24);
    for (std::uint32_t i = 0; i < t.size(); ++i)
      t[i] = static_cast<std::uint16_t>(compute_bin({static_cast<std::uint8_t>(i >> 16),
                                                     static_cast<std::uint8_t>((i >> 8) & 0xff),
                                                     static_cast<std::uint8_t>(i & 0xff)}));
    return t;
  }();
  return table;
}

}  // namespace

int ReferenceClassifier::bin_of(Rgb c) {
  return bin_table()[(static_cast<std::uint32_t>(c.r) << 16) | (static_cast<std::uint32_t>(c.g) << 8) | c.b];
}

std::vector<double> ReferenceClassifier::features(const RgbImage& image, const PatchView& patch) {
  const Rect& win = patch.window;
  check_window(image, win);
  std::vector<double> hist(kFeatures, 0.0);
  std::optional<Rect> occ;
  if (patch.occlusion) occ = intersect(win, patch.occlusion->rect);
  for (int y = win.y; y < win.y + win.h; ++y) {
    const std::uint8_t* row = image.row(y);
    for (int x = win.x; x < win.x + win.w; ++x) {
      if (occ && occ->contains(x, y)) continue;
      hist[bin_of({row[3 * x], row[3 * x + 1], row[3 * x + 2]})] += 1.0;
    }
  }
  if (occ) hist[bin_of(patch.occlusion->fill)] += occ->area();
  const double n = static_cast<double>(win.area());
  for (double& v : hist) v /= n;
  return hist;
}

double ReferenceClassifier::score(std::span<const double> f) const { return sigmoid(dot(weights_, f) + bias_); }

double ReferenceClassifier::classify(const RgbImage& image, const PatchView& patch) const {
  return score(features(image, patch));
}

std::vector<double> ReferenceClassifier::classify_batch(const RgbImage& image,
                                                        std::span<const PatchView> patches) const {
  if (patches.empty()) return {};
  // The integral only spans the bounding box of the windows, which matters
  // when saliency scores occluded copies of a single window.
  int x0 = image.width(), y0 = image.height(), x1 = 0, y1 = 0;
  for (const PatchView& p : patches) {
    check_window(image, p.window);
    x0 = std::min(x0, p.window.x);
    y0 = std::min(y0, p.window.y);
    x1 = std::max(x1, p.window.x + p.window.w);
    y1 = std::max(y1, p.window.y + p.window.h);
  }
  const int w = x1 - x0, h = y1 - y0;
  // integral[y * (w+1) + x] = sum of weights_[bin] over [x0, x0+x) x [y0, y0+y)
  std::vector<double> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = image.row(y0 + y) + 3 * x0;
    double run = 0.0;
    double* cur = &integral[static_cast<std::size_t>(y + 1) * (w + 1)];
    const double* prev = &integral[static_cast<std::size_t>(y) * (w + 1)];
    for (int x = 0; x < w; ++x) {
      run += weights_[bin_of({row[3 * x], row[3 * x + 1], row[3 * x + 2]})];
      cur[x + 1] = prev[x + 1] + run;
    }
  }
  auto box_sum = [&](const Rect& abs) {
    const Rect r{abs.x - x0, abs.y - y0, abs.w, abs.h};
    const std::size_t W = static_cast<std::size_t>(w + 1);
    return integral[(r.y + r.h) * W + r.x + r.w] - integral[r.y * W + r.x + r.w] - integral[(r.y + r.h) * W + r.x] +
           integral[r.y * W + r.x];
  };

  std::vector<double> out;
  out.reserve(patches.size());
  for (const PatchView& p : patches) {
    double s = box_sum(p.window);
    if (p.occlusion) {
      if (auto occ = intersect(p.window, p.occlusion->rect)) {
        s -= box_sum(*occ);
        s += occ->area() * weights_[bin_of(p.occlusion->fill)];
      }
    }
    out.push_back(sigmoid(s / p.window.area() + bias_));
  }
  return out;
}

void ReferenceClassifier::fit(std::span<const LabeledPatch> samples, const FitOptions& options, std::uint64_t seed,
                              const EpochCallback& on_epoch) {
  if (options.epochs < 0 || !(options.learning_rate > 0.0) || !(options.l2 >= 0.0))
    throw ValidationError("fit: invalid options");
  if (samples.empty()) return;

  const std::size_t n = samples.size();
  std::vector<std::vector<double>> x(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = features(*samples[i].image, samples[i].patch);
    y[i] = samples[i].label ? 1 : 0;
  }

  // Standardise each histogram bin over the training set.
  std::vector<double> mean(kFeatures, 0.0), scale(kFeatures, 0.0);
  for (const auto& xi : x)
    for (int j = 0; j < kFeatures; ++j) mean[j] += xi[j];
  for (double& m : mean) m /= static_cast<double>(n);
  for (const auto& xi : x)
    for (int j = 0; j < kFeatures; ++j) scale[j] += (xi[j] - mean[j]) * (xi[j] - mean[j]);
  for (double& s : scale) s = std::sqrt(s / static_cast<double>(n) + 1e-6);
  for (auto& xi : x)
    for (int j = 0; j < kFeatures; ++j) xi[j] = (xi[j] - mean[j]) / scale[j];

  // Warm start: express the current raw-space model in standardised space.
  std::vector<double> ws(kFeatures);
  double bs = bias_;
  for (int j = 0; j < kFeatures; ++j) {
    ws[j] = weights_[j] * scale[j];
    bs += weights_[j] * mean[j];
  }
  auto fold_back = [&] {
    double b = bs;
    for (int j = 0; j < kFeatures; ++j) {
      weights_[j] = ws[j] / scale[j];
      b -= weights_[j] * mean[j];
    }
    bias_ = b;
  };

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(kFeatures);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    for (std::size_t i : order) {
      const double gb = log_loss_gradient(ws, bs, x[i], y[i], options.l2, grad);
      for (int j = 0; j < kFeatures; ++j) ws[j] -= options.learning_rate * grad[j];
      bs -= options.learning_rate * gb;
    }
    fold_back();
    if (on_epoch) on_epoch(epoch, *this);
  }
  fold_back();
}

std::unique_ptr<PatchClassifier> ReferenceClassifier::clone() const {
  return std::make_unique<ReferenceClassifier>(*this);
}

void ReferenceClassifier::set_parameters(std::vector<double> weights, double bias) {
  if (weights.size() != static_cast<std::size_t>(kFeatures)) throw ValidationError("expected 512 weights");
  if (!std::all_of(weights.begin(), weights.end(), [](double v) { return std::isfinite(v); }) || !std::isfinite(bias))
    throw ValidationError("classifier parameters must be finite");
  weights_ = std::move(weights);
  bias_ = bias;
}

void ReferenceClassifier::save(std::ostream& out) const {
  out.precision(std::numeric_limits<double>::max_digits10);
  out << kHeader << '\n' << kFeatures + 1 << '\n';
  for (double w : weights_) out << w << '\n';
  out << bias_ << '\n';
}

ReferenceClassifier ReferenceClassifier::load(std::istream& in) {
  std::string header;
  std::getline(in, header);
  if (header != kHeader) throw ValidationError("not a reference classifier file");
  std::size_t count = 0;
  if (!(in >> count) || count != static_cast<std::size_t>(kFeatures + 1))
    throw ValidationError("reference classifier: expected 513 parameters");
  std::vector<double> values(count);
  for (double& v : values)
    if (!(in >> v)) throw ValidationError("reference classifier: truncated parameter list");
  ReferenceClassifier c;
  const double b = values.back();
  values.pop_back();
  c.set_parameters(std::move(values), b);
  return c;
}

}  // namespace gazelabel
