#include "gazelabel/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "gazelabel/random.hpp"

namespace gazelabel {

double MatchResult::total_distance() const {
  double s = 0.0;
  for (const MatchPair& p : pairs) s += p.distance;
  return s;
}

std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>>& cost) {
  // Shortest augmenting path with row/column potentials (Kuhn-Munkres),
  // O(n^2 m). Indices are 1-based internally; column 0 is a sentinel.
  const std::size_t n = cost.size();
  if (n == 0) return {};
  const std::size_t m = cost.front().size();
  if (m < n) throw ValidationError("solve_assignment: more rows than columns");
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> match_col(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match_col[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match_col[j0] = match_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (match_col[j] != 0) row_to_col[match_col[j] - 1] = j - 1;
  return row_to_col;
}

MatchResult match_points(std::span<const ImagePoint> pred, std::span<const ImagePoint> gt, double radius) {
  if (!(radius > 0.0)) throw ValidationError("match_points: radius must be > 0");
  MatchResult r;
  r.radius = radius;
  const std::size_t np = pred.size(), ng = gt.size();
  std::vector<char> pred_used(np, 0), gt_used(ng, 0);

  if (np > 0 && ng > 0) {
    // Every admissible pair is worth `bonus` more than any distance total,
    // so the minimum-cost assignment first maximises the number of matches
    // and then minimises their summed distance. Inadmissible pairs cost 0,
    // the same as leaving both points unmatched.
    const bool pred_rows = np <= ng;
    const std::size_t rows = pred_rows ? np : ng, cols = pred_rows ? ng : np;
    const double bonus = radius * static_cast<double>(rows + 1) + 1.0;
    std::vector<std::vector<double>> cost(rows, std::vector<double>(cols, 0.0));
    std::vector<std::vector<double>> dist(rows, std::vector<double>(cols, 0.0));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        const ImagePoint& a = pred_rows ? pred[i] : pred[j];
        const ImagePoint& b = pred_rows ? gt[j] : gt[i];
        const double d = std::hypot(a.x - b.x, a.y - b.y);
        dist[i][j] = d;
        if (d <= radius) cost[i][j] = d - bonus;
      }
    const std::vector<std::size_t> assign = solve_assignment(cost);
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t j = assign[i];
      if (dist[i][j] > radius) continue;
      const std::size_t p = pred_rows ? i : j, g = pred_rows ? j : i;
      r.pairs.push_back({p, g, dist[i][j]});
      pred_used[p] = 1;
      gt_used[g] = 1;
    }
    std::sort(r.pairs.begin(), r.pairs.end(), [](const MatchPair& a, const MatchPair& b) { return a.pred < b.pred; });
  }
  for (std::size_t i = 0; i < np; ++i)
    if (!pred_used[i]) r.fp.push_back(i);
  for (std::size_t j = 0; j < ng; ++j)
    if (!gt_used[j]) r.fn.push_back(j);
  return r;
}

MetricsReport MetricsReport::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  MetricsReport m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
  m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
  const double s = m.precision + m.recall;
  m.f1 = s > 0.0 ? 2.0 * m.precision * m.recall / s : 0.0;
  return m;
}

MetricsReport prf(std::span<const ImagePoint> pred, std::span<const ImagePoint> gt, double radius) {
  const MatchResult r = match_points(pred, gt, radius);
  return MetricsReport::from_counts(r.pairs.size(), r.fp.size(), r.fn.size());
}

MetricsReport prf_pooled(const PointsByImage& pred, const PointsByImage& gt, double radius) {
  std::size_t tp = 0, fp = 0, fn = 0;
  std::set<std::string> ids;
  for (const auto& [id, _] : pred) ids.insert(id);
  for (const auto& [id, _] : gt) ids.insert(id);
  static const std::vector<ImagePoint> none;
  for (const std::string& id : ids) {
    auto p = pred.find(id);
    auto g = gt.find(id);
    const MatchResult r = match_points(p == pred.end() ? none : p->second, g == gt.end() ? none : g->second, radius);
    tp += r.pairs.size();
    fp += r.fp.size();
    fn += r.fn.size();
  }
  return MetricsReport::from_counts(tp, fp, fn);
}

PointsByImage points_by_image(std::span<const ConsensusLabel> labels) {
  PointsByImage out;
  for (const ConsensusLabel& l : labels) out[l.image_id].push_back({l.x, l.y});
  return out;
}

PointsByImage points_by_image(std::span<const Detection> detections) {
  PointsByImage out;
  for (const Detection& d : detections) out[d.image_id].push_back({d.x, d.y});
  return out;
}

std::vector<PrPoint> pr_curve(std::span<const Detection> detections, const PointsByImage& gt, double radius,
                              std::span<const double> thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw ValidationError("pr_curve: thresholds must be ascending");
  std::vector<PrPoint> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    PointsByImage kept;
    for (const Detection& d : detections)
      if (d.probability >= t) kept[d.image_id].push_back({d.x, d.y});
    const MetricsReport m = prf_pooled(kept, gt, radius);
    out.push_back({t, m.precision, m.recall});
  }
  return out;
}

Stats describe(std::vector<double> values) {
  Stats s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  auto quantile = [&](double q) {
    const double pos = q * (n - 1.0);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(values.size() - 1, lo + 1);
    return values[lo] + (pos - lo) * (values[hi] - values[lo]);
  };
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  return s;
}

const SweepSummary& SweepTable::at_k(int k) const {
  for (const SweepSummary& s : summary)
    if (s.k == k) return s;
  throw ValidationError("sweep has no summary for k = " + std::to_string(k));
}

SequencesByImage group_by_image(std::vector<GazeSequence> sequences) {
  SequencesByImage out;
  for (GazeSequence& s : sequences) out[s.image_id].push_back(std::move(s));
  return out;
}

SweepTable group_size_sweep(const SequencesByImage& sequences, const PointsByImage& gt, const SweepOptions& options) {
  options.distill.validate();
  if (!(options.radius > 0.0)) throw ValidationError("sweep: radius must be > 0");
  if (options.n_runs < 1) throw ValidationError("sweep: n_runs must be >= 1");

  std::set<std::string> participant_set;
  for (const auto& [_, seqs] : sequences)
    for (const GazeSequence& s : seqs) participant_set.insert(s.participant_id);
  const std::vector<std::string> participants(participant_set.begin(), participant_set.end());
  for (int k : options.k_values)
    if (k < 1 || k > static_cast<int>(participants.size()))
      throw ValidationError("sweep: k = " + std::to_string(k) + " outside [1, " +
                            std::to_string(participants.size()) + "]");

  struct RunState {
    int k;
    int run;
    std::vector<std::string> group;
    std::size_t tp = 0, fp = 0, fn = 0;
    std::string error;
  };
  std::vector<RunState> runs;
  for (int k : options.k_values) {
    const auto groups = sample_groups(participants, k, options.n_runs, derive_seed(options.seed, static_cast<std::uint64_t>(k)));
    for (int r = 0; r < options.n_runs; ++r) runs.push_back({k, r, groups[r], 0, 0, 0, {}});
  }

  std::set<std::string> image_ids;
  for (const auto& [id, _] : sequences) image_ids.insert(id);
  for (const auto& [id, _] : gt) image_ids.insert(id);
  static const std::vector<ImagePoint> no_points;

  // Image-major: each participant's heatmap is built once per image and
  // summed per group, which is exact by linearity of accumulation.
  for (const std::string& id : image_ids) {
    auto git = gt.find(id);
    const std::vector<ImagePoint>& truth = git == gt.end() ? no_points : git->second;
    auto sit = sequences.find(id);
    if (sit == sequences.end() || sit->second.empty()) {
      for (RunState& rs : runs) rs.fn += truth.size();
      continue;
    }

    HeatmapStack stack(sit->second.front().display.image_size);
    std::string image_error;
    try {
      std::map<std::string, GazeHeatmap> per_participant;
      for (const GazeSequence& s : sit->second) {
        if (s.display.image_size != stack.size()) throw ValidationError("inconsistent image size for " + id);
        auto [it, inserted] = per_participant.try_emplace(s.participant_id, stack.size(), 1);
        for (const ImagePoint& p : project_sequence(filter_points(s, options.confidence_min)))
          it->second.deposit(p, options.distill);
      }
      for (auto& [p, h] : per_participant) stack.add(p, std::move(h));
    } catch (const std::exception& e) {
      image_error = "image " + id + ": " + e.what();
    }

    for (RunState& rs : runs) {
      if (!image_error.empty()) {
        if (rs.error.empty()) rs.error = image_error;
        continue;
      }
      try {
        std::vector<ImagePoint> pred;
        for (const ConsensusLabel& l : stack.distill(rs.group, options.distill, id)) pred.push_back({l.x, l.y});
        const MatchResult m = match_points(pred, truth, options.radius);
        rs.tp += m.pairs.size();
        rs.fp += m.fp.size();
        rs.fn += m.fn.size();
      } catch (const std::exception& e) {
        if (rs.error.empty()) rs.error = "image " + id + ": " + e.what();
      }
    }
  }

  SweepTable table;
  table.radius = options.radius;
  for (const RunState& rs : runs) {
    SweepRow row;
    row.k = rs.k;
    row.run = rs.run;
    row.participants = rs.group;
    row.error = rs.error;
    if (rs.error.empty()) {
      const MetricsReport m = MetricsReport::from_counts(rs.tp, rs.fp, rs.fn);
      row.precision = m.precision;
      row.recall = m.recall;
      row.f1 = m.f1;
    } else {
      row.precision = row.recall = row.f1 = std::numeric_limits<double>::quiet_NaN();
    }
    table.rows.push_back(std::move(row));
  }
  for (int k : options.k_values) {
    std::vector<double> p, r, f;
    for (const SweepRow& row : table.rows)
      if (row.k == k && row.error.empty()) {
        p.push_back(row.precision);
        r.push_back(row.recall);
        f.push_back(row.f1);
      }
    table.summary.push_back({k, static_cast<int>(p.size()), describe(p), describe(r), describe(f)});
  }
  return table;
}

}  // namespace gazelabel
