#pragma once

#include <string_view>
#include <vector>

#include "gazelabel/components.hpp"
#include "gazelabel/consensus.hpp"
#include "gazelabel/image.hpp"

namespace gazelabel {

struct Hsv {
  double h = 0.0;  ///< degrees, [0, 360)
  double s = 0.0;  ///< [0, 1]
  double v = 0.0;  ///< [0, 1]
};

/// Hexcone RGB -> HSV.
Hsv rgb_to_hsv(Rgb c);

/// Brown (DAB) colour window. A hue range with hue_min > hue_max wraps
/// through 0 degrees.
struct HsvRange {
  double hue_min = 10.0;
  double hue_max = 45.0;
  double sat_min = 0.25;
  double sat_max = 1.0;
  double val_min = 0.15;
  double val_max = 0.85;
  double min_area = 100.0;

  void validate() const;
  bool contains(const Hsv& c) const;
};

Mask brown_mask(const RgbImage& image, const HsvRange& range);

/// Colour-only baseline labels: centroids of brown components with at
/// least min_area pixels. Labels carry peak = 1.
std::vector<ConsensusLabel> detect_brown(const RgbImage& image, const HsvRange& range, std::string_view image_id);

}  // namespace gazelabel
