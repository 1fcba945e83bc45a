#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gazelabel {

/// Thrown for inputs that violate an operation's preconditions.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Continuous image coordinates, origin at the top-left corner. Pixel (i, j)
/// covers [i, i+1) x [j, j+1) and has its center at (i + 0.5, j + 0.5).
struct ImagePoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const ImagePoint&) const = default;
};

struct ImageSize {
  int w = 0;
  int h = 0;
  bool operator==(const ImageSize&) const = default;
};

inline bool on_image(ImagePoint p, ImageSize size) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x < size.w && p.y < size.h;
}

/// Integer pixel rectangle, half-open: [x, x+w) x [y, y+h).
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(double px, double py) const {
    return px >= x && py >= y && px < x + w && py < y + h;
  }
  int area() const { return w * h; }
  bool operator==(const Rect&) const = default;
};

/// Interleaved 8-bit RGB raster.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {});

  int width() const { return w_; }
  int height() const { return h_; }
  ImageSize size() const { return {w_, h_}; }
  bool empty() const { return w_ == 0 || h_ == 0; }

  Rgb at(int x, int y) const {
    const std::uint8_t* p = &data_[(static_cast<std::size_t>(y) * w_ + x) * 3];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    std::uint8_t* p = &data_[(static_cast<std::size_t>(y) * w_ + x) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  const std::uint8_t* row(int y) const { return &data_[static_cast<std::size_t>(y) * w_ * 3]; }

  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> bytes() { return data_; }

  bool operator==(const RgbImage&) const = default;

 private:
  int w_ = 0;
  int h_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Dense row-major scalar field.
struct ScalarField {
  int w = 0;
  int h = 0;
  std::vector<double> values;

  ScalarField() = default;
  ScalarField(int width, int height) : w(width), h(height), values(static_cast<std::size_t>(width) * height, 0.0) {}

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * w + x]; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * w + x]; }
  double max() const;
};

}  // namespace gazelabel
