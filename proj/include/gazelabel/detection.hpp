#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gazelabel/image.hpp"

namespace gazelabel {

/// A square of the patch replaced by a flat fill colour.
struct Occlusion {
  Rect rect;  ///< image coordinates
  Rgb fill;
};

/// A window of an image, optionally with one occluded square.
struct PatchView {
  Rect window;
  std::optional<Occlusion> occlusion;
};

struct LabeledPatch {
  const RgbImage* image = nullptr;
  PatchView patch;
  int label = 0;  ///< 1 positive, 0 negative
};

struct FitOptions {
  int epochs = 30;
  double learning_rate = 0.05;
  double l2 = 0.1;
};

class PatchClassifier;
/// Called after every training epoch with the current state.
using EpochCallback = std::function<void(int epoch, const PatchClassifier& current)>;

/// Patch classification contract used by the detection pipeline.
/// classify() must return a probability in [0, 1] and be pure after fit().
class PatchClassifier {
 public:
  virtual ~PatchClassifier() = default;

  virtual double classify(const RgbImage& image, const PatchView& patch) const = 0;

  /// Scores many patches of one image. The default loops over classify();
  /// implementations may share per-image work.
  virtual std::vector<double> classify_batch(const RgbImage& image, std::span<const PatchView> patches) const;

  /// Continues training from the current state; deterministic given seed.
  virtual void fit(std::span<const LabeledPatch> samples, const FitOptions& options, std::uint64_t seed,
                   const EpochCallback& on_epoch) = 0;

  virtual std::unique_ptr<PatchClassifier> clone() const = 0;
};

using ClassifierFactory = std::function<std::unique_ptr<PatchClassifier>()>;

struct Detection {
  std::string image_id;
  double x = 0.0;
  double y = 0.0;
  double probability = 0.0;
};

struct PipelineParams {
  int patch_size = 240;
  int stride = 60;
  double positive_threshold = 0.5;
  int occlusion_size = 40;
  int occlusion_stride = 20;
  double hotspot_fraction = 0.5;  ///< hotspot cutoff as a fraction of the per-image saliency max
  double hotspot_min_area = 100.0;

  void validate() const;
};

/// Window offsets along one axis: multiples of stride, with the last one
/// moved flush to the far edge when the grid does not reach it. If moving
/// it would open a gap, a flush window is appended instead.
std::vector<int> window_offsets(int extent, int patch, int stride);
std::vector<Rect> sliding_windows(ImageSize size, int patch, int stride);

struct ScoredBox {
  Rect box;
  double probability = 0.0;
};

/// Windows whose probability reaches params.positive_threshold.
std::vector<ScoredBox> slide_classify(const RgbImage& image, const PatchClassifier& classifier,
                                      const PipelineParams& params);

/// Produces a relevance field over the image from the positive boxes.
class SaliencyProvider {
 public:
  virtual ~SaliencyProvider() = default;
  virtual ScalarField saliency(const RgbImage& image, std::span<const ScoredBox> boxes,
                               const PatchClassifier& classifier) const = 0;
};

/// Occlusion sensitivity. Inside each box a square of `size` px slides with
/// `stride`, filled with the box's mean colour. A pixel's value within a box
/// is the mean probability drop over the squares covering it, clamped at 0;
/// the field takes the max over boxes and is 0 outside every box.
class OcclusionSaliency final : public SaliencyProvider {
 public:
  OcclusionSaliency(int size, int stride);
  ScalarField saliency(const RgbImage& image, std::span<const ScoredBox> boxes,
                       const PatchClassifier& classifier) const override;

 private:
  int size_;
  int stride_;
};

ScalarField saliency_map(const RgbImage& image, std::span<const ScoredBox> boxes, const PatchClassifier& classifier,
                         const PipelineParams& params);

/// Density-weighted centroids of 8-connected regions with value >= threshold
/// and at least min_area pixels. A non-positive threshold yields nothing.
std::vector<ImagePoint> extract_locations(const ScalarField& field, double threshold, double min_area);

/// Patch of patch_size centred on a point, shifted to lie inside the image.
Rect centered_window(ImagePoint p, ImageSize size, int patch_size);

std::vector<Detection> score_locations(const RgbImage& image, std::string_view image_id,
                                       std::span<const ImagePoint> points, const PatchClassifier& classifier,
                                       int patch_size);

/// Full pipeline: slide -> saliency -> hotspot centroids -> re-score.
/// Uses OcclusionSaliency from params unless a provider is given.
std::vector<Detection> detect(const RgbImage& image, std::string_view image_id, const PatchClassifier& classifier,
                              const PipelineParams& params, const SaliencyProvider* provider = nullptr);

}  // namespace gazelabel
