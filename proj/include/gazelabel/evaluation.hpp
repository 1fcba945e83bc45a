#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gazelabel/consensus.hpp"
#include "gazelabel/detection.hpp"
#include "gazelabel/gaze_model.hpp"

namespace gazelabel {

using PointsByImage = std::map<std::string, std::vector<ImagePoint>>;

struct MatchPair {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double distance = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> fp;  ///< unmatched prediction indices
  std::vector<std::size_t> fn;  ///< unmatched ground-truth indices
  double radius = 0.0;

  double total_distance() const;
};

/// Maximum-cardinality one-to-one matching among pairs at distance <= radius;
/// among those, the one with minimum total distance.
MatchResult match_points(std::span<const ImagePoint> pred, std::span<const ImagePoint> gt, double radius);

/// Minimum-cost assignment of rows to distinct columns for a rows x cols
/// matrix with rows <= cols. Returns the column of every row.
std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>>& cost);

struct MetricsReport {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  /// P := 1 without predictions, R := 1 without ground truth,
  /// F1 := 0 when P + R = 0.
  static MetricsReport from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
};

MetricsReport prf(std::span<const ImagePoint> pred, std::span<const ImagePoint> gt, double radius);

/// Micro-averaged metrics: counts pooled over every image in either map.
MetricsReport prf_pooled(const PointsByImage& pred, const PointsByImage& gt, double radius);

PointsByImage points_by_image(std::span<const ConsensusLabel> labels);
PointsByImage points_by_image(std::span<const Detection> detections);

struct PrPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
};

/// Pooled precision/recall of detections with probability >= t for every
/// threshold t (ascending).
std::vector<PrPoint> pr_curve(std::span<const Detection> detections, const PointsByImage& gt, double radius,
                              std::span<const double> thresholds);

struct SweepRow {
  int k = 0;
  int run = 0;
  std::vector<std::string> participants;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::string error;  ///< non-empty when this run failed
};

struct Stats {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;

  double iqr() const { return q3 - q1; }
};

/// Mean, sample std and linearly interpolated quartiles.
Stats describe(std::vector<double> values);

struct SweepSummary {
  int k = 0;
  int runs = 0;
  Stats precision;
  Stats recall;
  Stats f1;
};

struct SweepTable {
  double radius = 0.0;
  std::vector<SweepRow> rows;
  std::vector<SweepSummary> summary;

  const SweepSummary& at_k(int k) const;
};

struct SweepOptions {
  std::vector<int> k_values;
  int n_runs = 20;
  DistillParams distill;
  double confidence_min = 0.5;
  double radius = 30.0;
  std::uint64_t seed = 0;
};

/// Gaze sequences grouped by image id.
using SequencesByImage = std::map<std::string, std::vector<GazeSequence>>;
SequencesByImage group_by_image(std::vector<GazeSequence> sequences);

/// For every k, n_runs participant groups from sample_groups (seeded per k);
/// each run distills every image and scores pooled P/R/F1 against gt.
SweepTable group_size_sweep(const SequencesByImage& sequences, const PointsByImage& gt, const SweepOptions& options);

}  // namespace gazelabel
