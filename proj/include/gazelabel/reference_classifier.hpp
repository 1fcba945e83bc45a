#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "gazelabel/detection.hpp"

namespace gazelabel {

/// Log-loss of a logistic scorer on one example, with an L2 penalty
/// (l2 / 2) * |w|^2 on the weights only.
double log_loss(std::span<const double> w, double b, std::span<const double> x, int y, double l2);

/// Analytic gradient of log_loss: returns d/dw in grad_w and d/db.
double log_loss_gradient(std::span<const double> w, double b, std::span<const double> x, int y, double l2,
                         std::span<double> grad_w);

/// Desk-scale patch classifier: L1-normalised 8x8x8 HSV colour histogram
/// scored by a logistic linear model (512 weights + bias).
///
/// Training runs SGD in a standardised feature space and folds the
/// standardisation back into the raw weights after every epoch, so the
/// persisted state is always exactly 513 numbers. Because the score is
/// linear in the histogram, classify_batch() evaluates any number of
/// windows of one image from a single integral image of per-pixel weights.
class ReferenceClassifier final : public PatchClassifier {
 public:
  static constexpr int kBinsPerChannel = 8;
  static constexpr int kFeatures = kBinsPerChannel * kBinsPerChannel * kBinsPerChannel;

  ReferenceClassifier();

  static int bin_of(Rgb c);
  static std::vector<double> features(const RgbImage& image, const PatchView& patch);

  double classify(const RgbImage& image, const PatchView& patch) const override;
  std::vector<double> classify_batch(const RgbImage& image, std::span<const PatchView> patches) const override;
  void fit(std::span<const LabeledPatch> samples, const FitOptions& options, std::uint64_t seed,
           const EpochCallback& on_epoch) override;
  std::unique_ptr<PatchClassifier> clone() const override;

  /// Probability for a precomputed feature vector.
  double score(std::span<const double> features) const;

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  void set_parameters(std::vector<double> weights, double bias);

  /// Text format: header line, count line (513), then one number per line.
  void save(std::ostream& out) const;
  static ReferenceClassifier load(std::istream& in);

  bool operator==(const ReferenceClassifier& o) const { return weights_ == o.weights_ && bias_ == o.bias_; }

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
};

}  // namespace gazelabel
