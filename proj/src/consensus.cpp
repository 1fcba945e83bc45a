#include "gazelabel/consensus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "gazelabel/random.hpp"

namespace gazelabel {

void DistillParams::validate() const {
  if (!(sigma > 0.0)) throw ValidationError("sigma must be > 0");
  if (!(truncation_radius >= sigma)) throw ValidationError("truncation_radius must be >= sigma");
  if (!(threshold_coef >= 0.0)) throw ValidationError("threshold_coef must be >= 0");
  if (!(min_area >= 0.0)) throw ValidationError("min_area must be >= 0");
}

GazeHeatmap::GazeHeatmap(ImageSize size, int k)
    : size_(size),
      k_(k),
      tiles_x_((size.w + kTile - 1) / kTile),
      tiles_y_((size.h + kTile - 1) / kTile),
      tiles_(static_cast<std::size_t>(tiles_x_) * tiles_y_) {
  if (size.w <= 0 || size.h <= 0) throw ValidationError("heatmap size must be positive");
}

std::vector<double>& GazeHeatmap::tile_for(int x, int y) {
  auto& t = tiles_[static_cast<std::size_t>(y / kTile) * tiles_x_ + x / kTile];
  if (t.empty()) t.assign(kTile * kTile, 0.0);
  return t;
}

double GazeHeatmap::at(int x, int y) const {
  const auto& t = tiles_[static_cast<std::size_t>(y / kTile) * tiles_x_ + x / kTile];
  if (t.empty()) return 0.0;
  return t[(y % kTile) * kTile + x % kTile];
}

void GazeHeatmap::add(int x, int y, double v) { tile_for(x, y)[(y % kTile) * kTile + x % kTile] += v; }

void GazeHeatmap::set(int x, int y, double v) { tile_for(x, y)[(y % kTile) * kTile + x % kTile] = v; }

void GazeHeatmap::deposit(ImagePoint p, const DistillParams& params) {
  const double r = params.truncation_radius;
  const double inv2s2 = 1.0 / (2.0 * params.sigma * params.sigma);
  const int x0 = std::max(0, static_cast<int>(std::floor(p.x - r - 0.5)));
  const int x1 = std::min(size_.w - 1, static_cast<int>(std::ceil(p.x + r - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(p.y - r - 0.5)));
  const int y1 = std::min(size_.h - 1, static_cast<int>(std::ceil(p.y + r - 0.5)));
  if (x0 > x1 || y0 > y1) return;

  const int nx = x1 - x0 + 1, ny = y1 - y0 + 1;
  std::vector<double> dx2(nx), ex(nx), weights(static_cast<std::size_t>(nx) * ny, 0.0);
  for (int i = 0; i < nx; ++i) {
    const double d = x0 + i + 0.5 - p.x;
    dx2[i] = d * d;
    ex[i] = std::exp(-dx2[i] * inv2s2);
  }
  const double r2 = r * r;
  double total = 0.0;
  for (int j = 0; j < ny; ++j) {
    const double d = y0 + j + 0.5 - p.y;
    const double dy2 = d * d;
    const double ey = std::exp(-dy2 * inv2s2);
    for (int i = 0; i < nx; ++i) {
      if (dx2[i] + dy2 > r2) continue;
      const double w = ex[i] * ey;
      weights[static_cast<std::size_t>(j) * nx + i] = w;
      total += w;
    }
  }
  ++n_points_;
  if (total <= 0.0) {
    // Kernel support holds no pixel centre (tiny radius): deposit in the
    // containing pixel so mass is still conserved.
    add(std::clamp(static_cast<int>(p.x), 0, size_.w - 1), std::clamp(static_cast<int>(p.y), 0, size_.h - 1), 1.0);
    return;
  }
  const double norm = 1.0 / total;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double w = weights[static_cast<std::size_t>(j) * nx + i];
      if (w > 0.0) add(x0 + i, y0 + j, w * norm);
    }
}

double GazeHeatmap::total_mass() const {
  double s = 0.0;
  for (const auto& t : tiles_)
    for (double v : t) s += v;
  return s;
}

double GazeHeatmap::max_value() const {
  double m = 0.0;
  for (const auto& t : tiles_)
    for (double v : t) m = std::max(m, v);
  return m;
}

std::vector<double> GazeHeatmap::dense() const {
  std::vector<double> out(static_cast<std::size_t>(size_.w) * size_.h, 0.0);
  for (int y = 0; y < size_.h; ++y)
    for (int x = 0; x < size_.w; ++x) out[static_cast<std::size_t>(y) * size_.w + x] = at(x, y);
  return out;
}

GazeHeatmap& GazeHeatmap::operator+=(const GazeHeatmap& other) {
  if (other.size_ != size_) throw ValidationError("heatmap size mismatch");
  for (std::size_t i = 0; i < tiles_.size(); ++i) {
    const auto& src = other.tiles_[i];
    if (src.empty()) continue;
    auto& dst = tiles_[i];
    if (dst.empty()) {
      dst = src;
    } else {
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
  n_points_ += other.n_points_;
  return *this;
}

GazeHeatmap& GazeHeatmap::operator*=(double factor) {
  for (auto& t : tiles_)
    for (double& v : t) v *= factor;
  return *this;
}

GazeHeatmap accumulate_heatmap(std::span<const ImagePoint> points, ImageSize size, const DistillParams& params, int k) {
  params.validate();
  if (k < 1) throw ValidationError("accumulate_heatmap: k must be >= 1");
  GazeHeatmap h(size, k);
  for (const ImagePoint& p : points) {
    if (!on_image(p, size)) throw ValidationError("accumulate_heatmap: point off image");
    h.deposit(p, params);
  }
  return h;
}

std::vector<Component> hotspot_components(const GazeHeatmap& heatmap, const DistillParams& params) {
  params.validate();
  if (heatmap.k() < 1) throw ValidationError("threshold_and_clean: k must be >= 1");
  const double cutoff = params.threshold_coef * heatmap.k();
  std::vector<std::uint32_t> pixels;
  constexpr int T = GazeHeatmap::kTile;
  for (int ty = 0; ty < heatmap.tiles_y(); ++ty) {
    for (int tx = 0; tx < heatmap.tiles_x(); ++tx) {
      // Unallocated tiles are zero and only pass a non-positive cutoff.
      if (!heatmap.tile_allocated(tx, ty) && cutoff > 0.0) continue;
      const int xe = std::min(heatmap.width(), (tx + 1) * T);
      const int ye = std::min(heatmap.height(), (ty + 1) * T);
      for (int y = ty * T; y < ye; ++y)
        for (int x = tx * T; x < xe; ++x)
          if (heatmap.at(x, y) >= cutoff)
            pixels.push_back(static_cast<std::uint32_t>(y) * static_cast<std::uint32_t>(heatmap.width()) + x);
    }
  }
  std::sort(pixels.begin(), pixels.end());
  std::vector<Component> comps = connected_components(pixels, heatmap.width());
  std::erase_if(comps, [&](const Component& c) { return static_cast<double>(c.area()) < params.min_area; });
  return comps;
}

Mask threshold_and_clean(const GazeHeatmap& heatmap, const DistillParams& params) {
  Mask mask(heatmap.width(), heatmap.height());
  for (const Component& c : hotspot_components(heatmap, params))
    for (std::uint32_t idx : c.pixels) mask.bits[idx] = 1;
  return mask;
}

std::vector<ConsensusLabel> extract_centroids(std::span<const Component> components, const GazeHeatmap& heatmap,
                                              std::string_view image_id) {
  const int w = heatmap.width();
  std::vector<ConsensusLabel> labels;
  for (const Component& c : components) {
    ConsensusLabel l;
    l.image_id = std::string(image_id);
    const ImagePoint centroid = weighted_centroid(c, w, [&](int x, int y) { return heatmap.at(x, y); });
    l.x = centroid.x;
    l.y = centroid.y;
    l.hotspot_area = static_cast<double>(c.area());
    for (std::uint32_t idx : c.pixels)
      l.peak = std::max(l.peak, heatmap.at(static_cast<int>(idx % w), static_cast<int>(idx / w)));
    labels.push_back(std::move(l));
  }
  return labels;
}

std::vector<ConsensusLabel> extract_centroids(const Mask& mask, const GazeHeatmap& heatmap, std::string_view image_id) {
  if (mask.w != heatmap.width() || mask.h != heatmap.height())
    throw ValidationError("extract_centroids: mask and heatmap sizes differ");
  const std::vector<Component> comps = connected_components(mask);
  return extract_centroids(comps, heatmap, image_id);
}

std::vector<ConsensusLabel> distill_labels(std::span<const GazeSequence> sequences,
                                           std::span<const std::string> chosen, const DistillParams& params,
                                           double confidence_min) {
  params.validate();
  if (chosen.empty()) throw ValidationError("distill_labels: k must be >= 1");
  const std::set<std::string> group(chosen.begin(), chosen.end());
  if (group.size() != chosen.size()) throw ValidationError("distill_labels: duplicate participant in group");
  if (sequences.empty()) return {};

  const std::string& image_id = sequences.front().image_id;
  const ImageSize size = sequences.front().display.image_size;
  GazeHeatmap heatmap(size, static_cast<int>(chosen.size()));
  for (const GazeSequence& s : sequences) {
    if (s.image_id != image_id) throw ValidationError("distill_labels: sequences reference different images");
    if (s.display.image_size != size) throw ValidationError("distill_labels: inconsistent image size for " + image_id);
    if (!group.count(s.participant_id)) continue;
    for (const ImagePoint& p : project_sequence(filter_points(s, confidence_min))) heatmap.deposit(p, params);
  }
  if (heatmap.n_points() == 0) return {};
  return extract_centroids(hotspot_components(heatmap, params), heatmap, image_id);
}

void HeatmapStack::add(const std::string& participant, GazeHeatmap heatmap) {
  if (heatmap.size() != size_) throw ValidationError("HeatmapStack: heatmap size mismatch for " + participant);
  Member m{std::move(heatmap), {}};
  const std::size_t n_tiles = static_cast<std::size_t>(m.heatmap.tiles_x()) * m.heatmap.tiles_y();
  for (std::size_t t = 0; t < n_tiles; ++t) {
    const std::span<const double> data = m.heatmap.tile_data(t);
    if (!data.empty()) m.tile_max.emplace_back(t, *std::max_element(data.begin(), data.end()));
  }
  members_.insert_or_assign(participant, std::move(m));
}

std::vector<ConsensusLabel> HeatmapStack::distill(std::span<const std::string> group, const DistillParams& params,
                                                  std::string_view image_id) const {
  params.validate();
  if (group.empty()) throw ValidationError("distill: k must be >= 1");
  std::vector<const Member*> present;
  for (const std::string& p : group)
    if (auto it = members_.find(p); it != members_.end()) present.push_back(&it->second);
  if (present.empty()) return {};

  const int k = static_cast<int>(group.size());
  const double cutoff = params.threshold_coef * k;
  if (!(cutoff > 0.0)) {
    GazeHeatmap sum(size_, k);
    for (const Member* m : present) sum += m->heatmap;
    if (sum.n_points() == 0) return {};
    return extract_centroids(hotspot_components(sum, params), sum, image_id);
  }

  constexpr int T = GazeHeatmap::kTile;
  const int tiles_x = present.front()->heatmap.tiles_x();
  const std::size_t n_tiles = static_cast<std::size_t>(tiles_x) * present.front()->heatmap.tiles_y();
  std::vector<double> bound(n_tiles, 0.0);
  for (const Member* m : present)
    for (const auto& [t, mx] : m->tile_max) bound[t] += mx;

  std::vector<std::pair<std::uint32_t, double>> hot;  // pixel index, summed density
  std::array<double, T * T> local;
  for (std::size_t t = 0; t < n_tiles; ++t) {
    if (bound[t] < cutoff) continue;
    local.fill(0.0);
    for (const Member* m : present) {
      const std::span<const double> data = m->heatmap.tile_data(t);
      for (std::size_t i = 0; i < data.size(); ++i) local[i] += data[i];
    }
    const int tx = static_cast<int>(t % tiles_x), ty = static_cast<int>(t / tiles_x);
    for (int j = 0; j < T; ++j)
      for (int i = 0; i < T; ++i) {
        const double v = local[j * T + i];
        const int x = tx * T + i, y = ty * T + j;
        if (v >= cutoff && x < size_.w && y < size_.h)
          hot.emplace_back(static_cast<std::uint32_t>(y) * static_cast<std::uint32_t>(size_.w) + x, v);
      }
  }
  std::sort(hot.begin(), hot.end());
  std::vector<std::uint32_t> pixels(hot.size());
  for (std::size_t i = 0; i < hot.size(); ++i) pixels[i] = hot[i].first;

  auto value_at = [&](int x, int y) {
    const std::uint32_t idx = static_cast<std::uint32_t>(y) * static_cast<std::uint32_t>(size_.w) + x;
    return hot[std::lower_bound(pixels.begin(), pixels.end(), idx) - pixels.begin()].second;
  };
  std::vector<ConsensusLabel> labels;
  for (const Component& c : connected_components(pixels, size_.w)) {
    if (static_cast<double>(c.area()) < params.min_area) continue;
    ConsensusLabel l;
    l.image_id = std::string(image_id);
    const ImagePoint centroid = weighted_centroid(c, size_.w, value_at);
    l.x = centroid.x;
    l.y = centroid.y;
    l.hotspot_area = static_cast<double>(c.area());
    for (std::uint32_t idx : c.pixels)
      l.peak = std::max(l.peak, value_at(static_cast<int>(idx % size_.w), static_cast<int>(idx / size_.w)));
    labels.push_back(std::move(l));
  }
  return labels;
}

std::vector<std::vector<std::string>> sample_groups(std::span<const std::string> participants, int k, int n_runs,
                                                    std::uint64_t seed) {
  const int n = static_cast<int>(participants.size());
  if (k < 1 || k > n) throw ValidationError("sample_groups: k must lie in [1, number of participants]");
  if (n_runs < 1) throw ValidationError("sample_groups: n_runs must be >= 1");
  std::vector<std::vector<std::string>> runs;
  runs.reserve(n_runs);
  std::vector<int> idx(n);
  for (int run = 0; run < n_runs; ++run) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(run)));
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first k entries form a uniform k-subset.
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n - i)));
      std::swap(idx[i], idx[j]);
    }
    std::vector<int> pick(idx.begin(), idx.begin() + k);
    std::sort(pick.begin(), pick.end());
    std::vector<std::string> subset;
    subset.reserve(k);
    for (int i : pick) subset.push_back(participants[i]);
    runs.push_back(std::move(subset));
  }
  return runs;
}

}  // namespace gazelabel
