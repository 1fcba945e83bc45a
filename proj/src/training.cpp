#include "gazelabel/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gazelabel/random.hpp"

namespace gazelabel {

void TrainConfig::validate() const {
  pipeline.validate();
  if (!(margin_lo >= 0.0 && margin_lo <= margin_hi && margin_hi <= 1.0))
    throw ValidationError("marginal band must satisfy 0 <= lo <= hi <= 1");
  if (positive_jitter < 0 || jitter_px < 0) throw ValidationError("jitter settings must be >= 0");
  if (positive_core_margin < 0 || 2 * positive_core_margin >= pipeline.patch_size)
    throw ValidationError("positive_core_margin must lie in [0, patch_size / 2)");
}

namespace {

bool window_holds_label(const Rect& r, std::span<const ImagePoint> labels) {
  return std::any_of(labels.begin(), labels.end(), [&](const ImagePoint& p) { return r.contains(p.x, p.y); });
}

Rect shrink(const Rect& r, int m) { return {r.x + m, r.y + m, r.w - 2 * m, r.h - 2 * m}; }

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

// Positives centred on (and jittered around) every label, then the same
// number of random label-free windows.
std::vector<LabeledPatch> base_samples(std::span<const TrainingImage> images, const TrainConfig& cfg, Rng& rng) {
  const int P = cfg.pipeline.patch_size;
  std::vector<LabeledPatch> out;
  for (const TrainingImage& ti : images) {
    for (const ImagePoint& p : ti.labels) {
      out.push_back({ti.image, {centered_window(p, ti.image->size(), P), std::nullopt}, 1});
      for (int j = 0; j < cfg.positive_jitter; ++j) {
        const ImagePoint q{p.x + uniform_int(rng, -cfg.jitter_px, cfg.jitter_px),
                           p.y + uniform_int(rng, -cfg.jitter_px, cfg.jitter_px)};
        const Rect r = centered_window(q, ti.image->size(), P);
        if (r.contains(p.x, p.y)) out.push_back({ti.image, {r, std::nullopt}, 1});
      }
    }
  }
  const std::size_t n_pos = out.size();
  if (images.empty()) return out;
  std::size_t n_neg = 0;
  for (std::size_t attempt = 0; n_neg < n_pos && attempt < 50 * n_pos + 100; ++attempt) {
    const TrainingImage& ti = images[uniform_index(rng, images.size())];
    const Rect r{uniform_int(rng, 0, ti.image->width() - P), uniform_int(rng, 0, ti.image->height() - P), P, P};
    if (window_holds_label(r, ti.labels)) continue;
    out.push_back({ti.image, {r, std::nullopt}, 0});
    ++n_neg;
  }
  return out;
}

// Patch-level F1 at the pipeline's positive threshold.
double patch_f1(const PatchClassifier& clf, std::span<const LabeledPatch> samples, double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const LabeledPatch& s : samples) {
    const bool pred = clf.classify(*s.image, s.patch) >= threshold;
    if (pred && s.label) ++tp;
    if (pred && !s.label) ++fp;
    if (!pred && s.label) ++fn;
  }
  const double denom = 2.0 * tp + fp + fn;
  return denom > 0 ? 2.0 * tp / denom : 0.0;
}

struct Checkpoint {
  std::unique_ptr<PatchClassifier> state;
  double f1 = -1.0;
};

void fit_with_selection(PatchClassifier& clf, std::span<const LabeledPatch> samples,
                        std::span<const LabeledPatch> val, bool selectable, const TrainConfig& cfg, std::uint64_t seed,
                        Checkpoint& best) {
  clf.fit(samples, cfg.fit, seed, [&](int, const PatchClassifier& current) {
    if (!selectable) return;
    const double f1 = patch_f1(current, val, cfg.pipeline.positive_threshold);
    if (f1 > best.f1) {
      best.f1 = f1;
      best.state = current.clone();
    }
  });
}

}  // namespace

TrainResult train_two_iteration(std::span<const TrainingImage> train, std::span<const TrainingImage> val,
                                const ClassifierFactory& factory, const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  std::size_t n_labels = 0;
  for (const TrainingImage& ti : train) {
    if (!ti.image) throw ValidationError("training image " + ti.id + " has no pixels");
    n_labels += ti.labels.size();
  }
  if (n_labels == 0) throw ValidationError("train_two_iteration: no positive labels");

  TrainResult result;
  Rng rng(derive_seed(seed, 0x7261696e));
  const std::vector<LabeledPatch> base = base_samples(train, config, rng);
  Rng val_rng(derive_seed(seed, 0x76616c));
  const std::vector<LabeledPatch> val_samples = base_samples(val, config, val_rng);
  const bool selectable = std::any_of(val_samples.begin(), val_samples.end(), [](const LabeledPatch& s) { return s.label; });
  if (!selectable) result.warnings.push_back("validation set has no positive patches; keeping the last epoch");

  // Iteration 1.
  std::unique_ptr<PatchClassifier> clf = factory();
  Checkpoint best1;
  fit_with_selection(*clf, base, val_samples, selectable, config, derive_seed(seed, 1), best1);
  if (!best1.state) best1.state = clf->clone();
  result.val_f1_iter1 = selectable ? best1.f1 : 0.0;

  // Hard-negative mining on the training images with the iteration-1 model.
  std::vector<LabeledPatch> mined = base;
  const int P = config.pipeline.patch_size;
  for (const TrainingImage& ti : train) {
    const std::vector<Rect> windows = sliding_windows(ti.image->size(), P, config.pipeline.stride);
    std::vector<PatchView> views;
    views.reserve(windows.size());
    for (const Rect& r : windows) views.push_back({r, std::nullopt});
    const std::vector<double> probs = best1.state->classify_batch(*ti.image, views);
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (probs[i] < config.margin_lo || probs[i] > config.margin_hi) continue;
      int label;
      if (window_holds_label(shrink(windows[i], config.positive_core_margin), ti.labels))
        label = 1;
      else if (!window_holds_label(windows[i], ti.labels))
        label = 0;
      else
        continue;  // label near the border: ambiguous
      mined.push_back({ti.image, views[i], label});
      ++result.marginal_patches;
    }
  }

  // Iteration 2.
  std::unique_ptr<PatchClassifier> clf2 = best1.state->clone();
  Checkpoint best2;
  fit_with_selection(*clf2, mined, val_samples, selectable, config, derive_seed(seed, 2), best2);
  if (!best2.state) best2.state = std::move(clf2);
  result.val_f1_iter2 = selectable ? best2.f1 : 0.0;
  result.classifier = std::move(best2.state);
  return result;
}

}  // namespace gazelabel
