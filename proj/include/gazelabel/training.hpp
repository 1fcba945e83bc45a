#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gazelabel/detection.hpp"

namespace gazelabel {

struct TrainingImage {
  std::string id;
  const RgbImage* image = nullptr;
  std::vector<ImagePoint> labels;  ///< point labels from any source
};

struct TrainConfig {
  PipelineParams pipeline;
  FitOptions fit;
  double margin_lo = 0.35;  ///< marginal band for hard-negative mining
  double margin_hi = 0.65;
  int positive_jitter = 4;        ///< extra shifted copies of every positive patch
  int jitter_px = 60;             ///< max shift of a jittered positive, per axis
  int positive_core_margin = 20;  ///< mined window is positive if a label lies this far inside it

  void validate() const;
};

struct TrainResult {
  std::unique_ptr<PatchClassifier> classifier;
  double val_f1_iter1 = 0.0;
  double val_f1_iter2 = 0.0;
  std::size_t marginal_patches = 0;
  std::vector<std::string> warnings;
};

/// Two-iteration training. Iteration 1 fits on patches centred on labels
/// plus an equal number of random patches containing no label. Iteration 2
/// resumes from the best iteration-1 checkpoint and adds windows of the
/// training images whose iteration-1 probability falls in the marginal
/// band, labelled by proximity to a point label. In both iterations the
/// epoch with the highest patch-level validation F1 is kept.
TrainResult train_two_iteration(std::span<const TrainingImage> train, std::span<const TrainingImage> val,
                                const ClassifierFactory& factory, const TrainConfig& config, std::uint64_t seed);

}  // namespace gazelabel
