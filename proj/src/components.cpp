#include "gazelabel/components.hpp"

#include <algorithm>
#include <cstring>

namespace gazelabel {

RgbImage::RgbImage(int w, int h, Rgb fill) : w_(w), h_(h) {
  if (w < 0 || h < 0) throw ValidationError("RgbImage: negative dimensions");
  data_.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

double ScalarField::max() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  return m;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::vector<Component> connected_components(const Mask& mask) {
  std::vector<Component> out;
  const std::size_t n = mask.bits.size();
  if (n == 0) return out;

  std::vector<std::uint8_t> todo = mask.bits;
  std::vector<std::uint32_t> stack;
  const int w = mask.w, h = mask.h;

  std::size_t i = 0;
  while (i < n) {
    // Skip zero runs a word at a time; masks are usually sparse.
    if (i % 8 == 0 && i + 8 <= n) {
      std::uint64_t word;
      std::memcpy(&word, &todo[i], 8);
      if (word == 0) {
        i += 8;
        continue;
      }
    }
    if (!todo[i]) {
      ++i;
      continue;
    }

    Component comp;
    int x0 = w, y0 = h, x1 = -1, y1 = -1;
    todo[i] = 0;
    stack.assign(1, static_cast<std::uint32_t>(i));
    while (!stack.empty()) {
      const std::uint32_t idx = stack.back();
      stack.pop_back();
      comp.pixels.push_back(idx);
      const int x = static_cast<int>(idx % static_cast<std::uint32_t>(w));
      const int y = static_cast<int>(idx / static_cast<std::uint32_t>(w));
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
      for (int dy = -1; dy <= 1; ++dy) {
        const int ny = y + dy;
        if (ny < 0 || ny >= h) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          if (nx < 0 || nx >= w || (dx == 0 && dy == 0)) continue;
          const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
          if (todo[nidx]) {
            todo[nidx] = 0;
            stack.push_back(static_cast<std::uint32_t>(nidx));
          }
        }
      }
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    comp.bbox = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    out.push_back(std::move(comp));
    ++i;
  }
  return out;
}

std::vector<Component> connected_components(std::span<const std::uint32_t> pixels, int width) {
  const std::size_t n = pixels.size();
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto unite = [&](std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  auto lookup = [&](std::uint32_t idx) -> std::ptrdiff_t {
    auto it = std::lower_bound(pixels.begin(), pixels.end(), idx);
    return it != pixels.end() && *it == idx ? it - pixels.begin() : -1;
  };
  const auto w = static_cast<std::uint32_t>(width);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t p = pixels[i];
    const std::uint32_t x = p % w, y = p / w;
    if (x > 0 && i > 0 && pixels[i - 1] == p - 1) unite(i, i - 1);
    if (y == 0) continue;
    for (int dx = -1; dx <= 1; ++dx) {
      if ((dx < 0 && x == 0) || (dx > 0 && x + 1 >= w)) continue;
      const std::ptrdiff_t j = lookup(p - w + static_cast<std::uint32_t>(static_cast<int>(x) + dx) - x);
      if (j >= 0) unite(i, static_cast<std::size_t>(j));
    }
  }

  // Roots are the smallest member index, so components come out in raster
  // order of their first pixel and pixels stay sorted.
  std::vector<Component> out;
  std::vector<std::size_t> slot(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (r == i) {
      slot[i] = out.size();
      out.emplace_back();
      out.back().bbox = {width, 1 << 30, -1, -1};
    }
    Component& c = out[slot[r]];
    c.pixels.push_back(pixels[i]);
    const int x = static_cast<int>(pixels[i] % w), y = static_cast<int>(pixels[i] / w);
    // bbox holds x0, y0, x1, y1 until the fix-up below.
    c.bbox = {std::min(c.bbox.x, x), std::min(c.bbox.y, y), std::max(c.bbox.w, x), std::max(c.bbox.h, y)};
  }
  for (Component& c : out) c.bbox = {c.bbox.x, c.bbox.y, c.bbox.w - c.bbox.x + 1, c.bbox.h - c.bbox.y + 1};
  return out;
}

std::vector<Component> remove_small_components(Mask& mask, double min_area) {
  std::vector<Component> comps = connected_components(mask);
  std::vector<Component> kept;
  kept.reserve(comps.size());
  for (Component& c : comps) {
    if (static_cast<double>(c.area()) < min_area) {
      for (std::uint32_t idx : c.pixels) mask.bits[idx] = 0;
    } else {
      kept.push_back(std::move(c));
    }
  }
  return kept;
}

}  // namespace gazelabel
