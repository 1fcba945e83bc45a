#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazelabel/gaze_model.hpp"
#include "gazelabel/image.hpp"

namespace gazelabel {

struct SlideSpec {
  int n_images = 200;
  int image_size = 1600;
  double mitosis_rate = 1.5;     ///< mean mitoses per positive image (at least one each)
  double distractor_rate = 0.8;  ///< Poisson mean brown artifacts per image
  double nuclei_density = 150.0; ///< Poisson mean background nuclei per megapixel
  double positive_fraction = 0.5;
  double mimic_fraction = 0.3;  ///< share of distractors that draw gaze like a mitosis
  std::uint64_t seed = 1;

  void validate() const;
};

/// Object placement for one image; pixels come from render_image().
struct SlideLayout {
  std::string image_id;
  int index = 0;
  ImageSize size;
  bool positive = false;
  std::vector<ImagePoint> mitoses;
  std::vector<ImagePoint> distractors;
  /// How strongly each object draws gaze, in [0, 1]. Mitoses are drawn
  /// from [0.4, 1]; mimic distractors from [0.7, 1], others from [0, 0.5].
  std::vector<double> mitosis_salience;
  std::vector<double> distractor_salience;
};

struct SlideImage {
  SlideLayout layout;
  RgbImage image;
};

std::string image_id_for(int index);

/// Exactly round(n * positive_fraction) positive images, in seeded order.
/// A positive image holds 1 + Poisson(mitosis_rate - 1) mitoses (none when
/// the rate is 0); every image holds Poisson(distractor_rate) distractors.
std::vector<SlideLayout> layout_slide(const SlideSpec& spec);

/// Off-white background with bluish nuclei, dark-brown elliptical mitoses
/// and lighter-brown irregular distractors. Deterministic per image.
RgbImage render_image(const SlideSpec& spec, const SlideLayout& layout);

std::vector<SlideImage> gen_slide(const SlideSpec& spec);

/// A fixation on an object happens with probability rate * salience. Its
/// duration is dwell_ms times a mean-one log-normal factor with log-sd
/// dwell_spread; off-target fixations land uniformly on the image.
struct ObserverModel {
  std::string id;
  double hit_rate = 0.95;
  double distractor_attraction = 0.6;
  double dwell_ms = 450.0;
  double dwell_spread = 0.6;
  double dispersion = 25.0;  ///< image px std dev of samples around the fixation target
  double false_fixations = 2.0;
  double false_dwell_ms = 250.0;
  double sample_rate = 60.0;
  double dropout = 0.05;

  void validate() const;
};

/// Population of n observers around `base`: hit rate, distractor
/// attraction, dwell and dispersion vary across observers.
std::vector<ObserverModel> default_observers(int n = 14, const ObserverModel& base = {});

struct GazeSimOptions {
  int screen_w = 1920;
  int screen_h = 1080;
  /// Forces one transform for every display instead of a random one.
  std::optional<int> fixed_rotation;
  std::optional<Flip> fixed_flip;
};

/// One sequence per (observer, image). Fixation samples are generated in
/// image space and mapped through the forward display transform onto the
/// screen; dropped samples are either N/A or low-confidence.
std::vector<GazeSequence> gen_gaze(std::span<const SlideLayout> layouts, std::span<const ObserverModel> observers,
                                   std::uint64_t seed, const GazeSimOptions& options = {});

}  // namespace gazelabel
