#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gazelabel/image.hpp"

namespace gazelabel {

/// Binary w x h mask, one byte per pixel (0 or 1).
struct Mask {
  int w = 0;
  int h = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int width, int height) : w(width), h(height), bits(static_cast<std::size_t>(width) * height, 0) {}

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * w + x] != 0; }
  void set(int x, int y, bool v = true) { bits[static_cast<std::size_t>(y) * w + x] = v ? 1 : 0; }
  std::size_t count() const;
};

/// One 8-connected component: linear pixel indices (y * w + x) and bounding box.
struct Component {
  std::vector<std::uint32_t> pixels;
  Rect bbox;

  std::size_t area() const { return pixels.size(); }
};

/// 8-connected components in raster order of their first pixel.
std::vector<Component> connected_components(const Mask& mask);

/// Same labelling for a sparse mask given as sorted, unique linear pixel
/// indices of a width-wide image.
std::vector<Component> connected_components(std::span<const std::uint32_t> pixels, int width);

/// Clears every component smaller than min_area pixels; returns survivors.
std::vector<Component> remove_small_components(Mask& mask, double min_area);

/// Value-weighted centroid of pixel centers. Falls back to the unweighted
/// centroid when all weights are zero.
template <typename ValueAt>
ImagePoint weighted_centroid(const Component& c, int width, ValueAt&& value_at) {
  double sw = 0.0, sx = 0.0, sy = 0.0;
  double ux = 0.0, uy = 0.0;
  for (std::uint32_t idx : c.pixels) {
    const int x = static_cast<int>(idx % static_cast<std::uint32_t>(width));
    const int y = static_cast<int>(idx / static_cast<std::uint32_t>(width));
    const double cx = x + 0.5, cy = y + 0.5;
    const double v = value_at(x, y);
    sw += v;
    sx += v * cx;
    sy += v * cy;
    ux += cx;
    uy += cy;
  }
  if (sw > 0.0) return {sx / sw, sy / sw};
  const double n = static_cast<double>(c.pixels.size());
  return {ux / n, uy / n};
}

}  // namespace gazelabel
