#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gazelabel/components.hpp"
#include "gazelabel/gaze_model.hpp"

namespace gazelabel {

struct DistillParams {
  double sigma = 10.0;              ///< Gaussian std dev, px
  double truncation_radius = 30.0;  ///< kernel support radius, px
  double threshold_coef = 0.0018;   ///< cutoff is threshold_coef * k
  double min_area = 400.0;          ///< hotspots below this many pixels are dropped

  void validate() const;
};

/// Accumulated gaze density over a w x h pixel grid. Storage is tiled and
/// only tiles that received mass are allocated; untouched tiles read as zero.
class GazeHeatmap {
 public:
  static constexpr int kTile = 32;

  GazeHeatmap() = default;
  GazeHeatmap(ImageSize size, int k);

  int width() const { return size_.w; }
  int height() const { return size_.h; }
  ImageSize size() const { return size_; }
  int k() const { return k_; }
  void set_k(int k) { k_ = k; }
  std::size_t n_points() const { return n_points_; }

  double at(int x, int y) const;
  void add(int x, int y, double v);
  void set(int x, int y, double v);

  /// Deposits one unit-mass truncated Gaussian centred at p.
  void deposit(ImagePoint p, const DistillParams& params);

  double total_mass() const;
  double max_value() const;
  std::vector<double> dense() const;

  /// Element-wise sum; point counts add, k is kept.
  GazeHeatmap& operator+=(const GazeHeatmap& other);
  GazeHeatmap& operator*=(double factor);

  int tiles_x() const { return tiles_x_; }
  int tiles_y() const { return tiles_y_; }
  bool tile_allocated(int tx, int ty) const { return !tiles_[static_cast<std::size_t>(ty) * tiles_x_ + tx].empty(); }
  /// Row-major kTile x kTile values of tile ty * tiles_x() + tx; empty if unallocated.
  std::span<const double> tile_data(std::size_t index) const { return tiles_[index]; }

 private:
  std::vector<double>& tile_for(int x, int y);

  ImageSize size_{};
  int k_ = 1;
  std::size_t n_points_ = 0;
  int tiles_x_ = 0;
  int tiles_y_ = 0;
  std::vector<std::vector<double>> tiles_;
};

struct ConsensusLabel {
  std::string image_id;
  double x = 0.0;
  double y = 0.0;
  double hotspot_area = 0.0;  ///< component pixel count
  double peak = 0.0;          ///< max density inside the component
};

GazeHeatmap accumulate_heatmap(std::span<const ImagePoint> points, ImageSize size, const DistillParams& params, int k);

/// Pixels with density >= threshold_coef * k, minus 8-connected components
/// smaller than min_area.
Mask threshold_and_clean(const GazeHeatmap& heatmap, const DistillParams& params);

/// The components of threshold_and_clean() without materialising the mask.
std::vector<Component> hotspot_components(const GazeHeatmap& heatmap, const DistillParams& params);

/// One label per 8-connected component, at its density-weighted centroid.
std::vector<ConsensusLabel> extract_centroids(const Mask& mask, const GazeHeatmap& heatmap, std::string_view image_id);
std::vector<ConsensusLabel> extract_centroids(std::span<const Component> components, const GazeHeatmap& heatmap,
                                              std::string_view image_id);

/// filter -> project -> accumulate (k = |chosen|) -> threshold -> centroids,
/// for the sequences of a single image.
std::vector<ConsensusLabel> distill_labels(std::span<const GazeSequence> sequences,
                                           std::span<const std::string> chosen, const DistillParams& params,
                                           double confidence_min);

/// Per-participant heatmaps (k = 1) of one image. distill() gives the labels
/// of any group exactly as distill_labels() would, by linearity of the sum,
/// but only sums tiles whose upper bound can reach the cutoff.
class HeatmapStack {
 public:
  explicit HeatmapStack(ImageSize size) : size_(size) {}

  ImageSize size() const { return size_; }
  /// Replaces any previous heatmap of the participant.
  void add(const std::string& participant, GazeHeatmap heatmap);
  bool contains(const std::string& participant) const { return members_.count(participant) != 0; }

  /// k = group.size(); participants without a heatmap contribute nothing.
  std::vector<ConsensusLabel> distill(std::span<const std::string> group, const DistillParams& params,
                                      std::string_view image_id) const;

 private:
  struct Member {
    GazeHeatmap heatmap;
    std::vector<std::pair<std::size_t, double>> tile_max;  ///< allocated tiles only
  };
  ImageSize size_;
  std::map<std::string, Member> members_;
};

/// n_runs subsets of k distinct participants, each drawn uniformly; members
/// are returned in the order they appear in `participants`.
std::vector<std::vector<std::string>> sample_groups(std::span<const std::string> participants, int k, int n_runs,
                                                    std::uint64_t seed);

}  // namespace gazelabel
