#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "gazelabel/consensus.hpp"
#include "gazelabel/heuristic.hpp"
#include "gazelabel/synthetic.hpp"
#include "gazelabel/training.hpp"

namespace gazelabel {

/// Every tunable of the batch commands. Keys are `section.name`, e.g.
/// `distill.sigma` or `hsv.hue_min`; see RunConfig::keys().
struct RunConfig {
  std::uint64_t seed = 1;

  DistillParams distill;
  double confidence_min = 0.5;
  int k = 14;

  HsvRange hsv;

  TrainConfig train;
  int n_seeds = 5;
  double val_fraction = 0.2;

  double match_radius = 30.0;

  int sweep_k_min = 3;
  int sweep_k_max = 14;
  int sweep_runs = 20;

  SlideSpec slide;
  ObserverModel observer;
  int n_observers = 14;
  int screen_w = 1920;
  int screen_h = 1080;

  std::string data;
  std::string images;
  std::string labels;
  std::string gt;
  std::string test_data;
  std::string out;

  /// Throws ValidationError for an unknown key or unparsable value.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  /// Reads `key = value` lines; `[section]` headers prefix later keys with
  /// `section.`; `#` and `;` start comments.
  void merge_file(const std::filesystem::path& path);
  void merge_text(const std::string& text);

  /// Cross-field validation of every parameter group.
  void validate() const;

  /// Sorted `key=value` lines.
  std::string canonical() const;
  /// FNV-1a 64 of canonical() without the io.* lines, as 16 hex digits.
  std::string hash() const;
};

}  // namespace gazelabel
