#include "gazelabel/heuristic.hpp"

#include <algorithm>

namespace gazelabel {

Hsv rgb_to_hsv(Rgb c) {
  const double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta <= 0.0) return out;
  double h;
  if (mx == r) {
    h = 60.0 * (g - b) / delta;
  } else if (mx == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.h = h;
  return out;
}

void HsvRange::validate() const {
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  if (!in(hue_min, 0.0, 360.0) || !in(hue_max, 0.0, 360.0)) throw ValidationError("hsv hue bounds must lie in [0, 360]");
  if (!in(sat_min, 0.0, 1.0) || !in(sat_max, 0.0, 1.0) || sat_min > sat_max)
    throw ValidationError("hsv saturation bounds must satisfy 0 <= min <= max <= 1");
  if (!in(val_min, 0.0, 1.0) || !in(val_max, 0.0, 1.0) || val_min > val_max)
    throw ValidationError("hsv value bounds must satisfy 0 <= min <= max <= 1");
  if (!(min_area >= 0.0)) throw ValidationError("hsv min_area must be >= 0");
}

bool HsvRange::contains(const Hsv& c) const {
  const bool hue_ok = hue_min <= hue_max ? (c.h >= hue_min && c.h <= hue_max) : (c.h >= hue_min || c.h <= hue_max);
  return hue_ok && c.s >= sat_min && c.s <= sat_max && c.v >= val_min && c.v <= val_max;
}

Mask brown_mask(const RgbImage& image, const HsvRange& range) {
  range.validate();
  Mask mask(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    const std::uint8_t* row = image.row(y);
    for (int x = 0; x < image.width(); ++x) {
      const Rgb c{row[3 * x], row[3 * x + 1], row[3 * x + 2]};
      // Cheap reject: grey-ish pixels cannot reach the saturation floor.
      const int mx = std::max({c.r, c.g, c.b}), mn = std::min({c.r, c.g, c.b});
      if (range.sat_min > 0.0 && (mx == 0 || static_cast<double>(mx - mn) / mx < range.sat_min)) continue;
      if (range.contains(rgb_to_hsv(c))) mask.set(x, y);
    }
  }
  return mask;
}

std::vector<ConsensusLabel> detect_brown(const RgbImage& image, const HsvRange& range, std::string_view image_id) {
  Mask mask = brown_mask(image, range);
  std::vector<ConsensusLabel> labels;
  for (const Component& c : remove_small_components(mask, range.min_area)) {
    const ImagePoint p = weighted_centroid(c, mask.w, [](int, int) { return 1.0; });
    labels.push_back({std::string(image_id), p.x, p.y, static_cast<double>(c.area()), 1.0});
  }
  return labels;
}

}  // namespace gazelabel
