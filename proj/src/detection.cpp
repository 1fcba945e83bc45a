#include "gazelabel/detection.hpp"

#include <algorithm>
#include <cmath>

#include "gazelabel/components.hpp"

namespace gazelabel {

std::vector<double> PatchClassifier::classify_batch(const RgbImage& image, std::span<const PatchView> patches) const {
  std::vector<double> out;
  out.reserve(patches.size());
  for (const PatchView& p : patches) out.push_back(classify(image, p));
  return out;
}

void PipelineParams::validate() const {
  if (patch_size <= 0) throw ValidationError("patch_size must be > 0");
  if (stride <= 0 || stride > patch_size) throw ValidationError("stride must satisfy 0 < stride <= patch_size");
  if (!(positive_threshold >= 0.0 && positive_threshold <= 1.0))
    throw ValidationError("positive_threshold must lie in [0, 1]");
  if (occlusion_size <= 0 || occlusion_size > patch_size) throw ValidationError("occlusion_size must lie in (0, patch_size]");
  if (occlusion_stride <= 0 || occlusion_stride > occlusion_size)
    throw ValidationError("occlusion_stride must satisfy 0 < stride <= occlusion_size");
  if (!(hotspot_fraction > 0.0 && hotspot_fraction <= 1.0)) throw ValidationError("hotspot_fraction must lie in (0, 1]");
  if (!(hotspot_min_area >= 0.0)) throw ValidationError("hotspot_min_area must be >= 0");
}

std::vector<int> window_offsets(int extent, int patch, int stride) {
  if (patch <= 0 || stride <= 0) throw ValidationError("window_offsets: patch and stride must be > 0");
  if (extent < patch) throw ValidationError("image is smaller than the patch size");
  const int m = (extent - patch) / stride;
  std::vector<int> offs;
  for (int i = 0; i <= m; ++i) offs.push_back(i * stride);
  const int flush = extent - patch;
  if (offs.back() != flush) {
    if (m >= 1 && (m - 1) * stride + patch >= flush)
      offs.back() = flush;
    else
      offs.push_back(flush);
  }
  return offs;
}

std::vector<Rect> sliding_windows(ImageSize size, int patch, int stride) {
  const std::vector<int> xs = window_offsets(size.w, patch, stride);
  const std::vector<int> ys = window_offsets(size.h, patch, stride);
  std::vector<Rect> out;
  out.reserve(xs.size() * ys.size());
  for (int y : ys)
    for (int x : xs) out.push_back({x, y, patch, patch});
  return out;
}

std::vector<ScoredBox> slide_classify(const RgbImage& image, const PatchClassifier& classifier,
                                      const PipelineParams& params) {
  params.validate();
  const std::vector<Rect> windows = sliding_windows(image.size(), params.patch_size, params.stride);
  std::vector<PatchView> views;
  views.reserve(windows.size());
  for (const Rect& r : windows) views.push_back({r, std::nullopt});
  const std::vector<double> probs = classifier.classify_batch(image, views);
  std::vector<ScoredBox> out;
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (probs[i] >= params.positive_threshold) out.push_back({windows[i], probs[i]});
  return out;
}

OcclusionSaliency::OcclusionSaliency(int size, int stride) : size_(size), stride_(stride) {
  if (size <= 0 || stride <= 0) throw ValidationError("occlusion size and stride must be > 0");
}

ScalarField OcclusionSaliency::saliency(const RgbImage& image, std::span<const ScoredBox> boxes,
                                        const PatchClassifier& classifier) const {
  ScalarField field(image.width(), image.height());
  for (const ScoredBox& sb : boxes) {
    const Rect& box = sb.box;
    if (box.w < size_ || box.h < size_) continue;

    double sr = 0, sg = 0, sbl = 0;
    for (int y = box.y; y < box.y + box.h; ++y) {
      const std::uint8_t* row = image.row(y);
      for (int x = box.x; x < box.x + box.w; ++x) {
        sr += row[3 * x];
        sg += row[3 * x + 1];
        sbl += row[3 * x + 2];
      }
    }
    const double n = box.area();
    const Rgb fill{static_cast<std::uint8_t>(std::lround(sr / n)), static_cast<std::uint8_t>(std::lround(sg / n)),
                   static_cast<std::uint8_t>(std::lround(sbl / n))};

    const std::vector<int> xs = window_offsets(box.w, size_, stride_);
    const std::vector<int> ys = window_offsets(box.h, size_, stride_);
    std::vector<PatchView> views;
    views.reserve(xs.size() * ys.size());
    for (int oy : ys)
      for (int ox : xs) views.push_back({box, Occlusion{{box.x + ox, box.y + oy, size_, size_}, fill}});
    const std::vector<double> masked = classifier.classify_batch(image, views);

    std::vector<double> sum(static_cast<std::size_t>(box.w) * box.h, 0.0);
    std::vector<int> cover(sum.size(), 0);
    for (std::size_t v = 0; v < views.size(); ++v) {
      const double drop = std::max(0.0, sb.probability - masked[v]);
      const Rect& o = views[v].occlusion->rect;
      for (int y = o.y - box.y; y < o.y - box.y + o.h; ++y)
        for (int x = o.x - box.x; x < o.x - box.x + o.w; ++x) {
          sum[static_cast<std::size_t>(y) * box.w + x] += drop;
          ++cover[static_cast<std::size_t>(y) * box.w + x];
        }
    }
    for (int y = 0; y < box.h; ++y)
      for (int x = 0; x < box.w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * box.w + x;
        if (cover[i] == 0) continue;
        double& f = field.at(box.x + x, box.y + y);
        f = std::max(f, sum[i] / cover[i]);
      }
  }
  return field;
}

ScalarField saliency_map(const RgbImage& image, std::span<const ScoredBox> boxes, const PatchClassifier& classifier,
                         const PipelineParams& params) {
  return OcclusionSaliency(params.occlusion_size, params.occlusion_stride).saliency(image, boxes, classifier);
}

std::vector<ImagePoint> extract_locations(const ScalarField& field, double threshold, double min_area) {
  std::vector<ImagePoint> out;
  if (!(threshold > 0.0)) return out;
  Mask mask(field.w, field.h);
  for (std::size_t i = 0; i < field.values.size(); ++i)
    if (field.values[i] >= threshold) mask.bits[i] = 1;
  for (const Component& c : remove_small_components(mask, min_area))
    out.push_back(weighted_centroid(c, field.w, [&](int x, int y) { return field.at(x, y); }));
  return out;
}

Rect centered_window(ImagePoint p, ImageSize size, int patch_size) {
  if (size.w < patch_size || size.h < patch_size) throw ValidationError("image is smaller than the patch size");
  const int x = std::clamp(static_cast<int>(std::lround(p.x - patch_size / 2.0)), 0, size.w - patch_size);
  const int y = std::clamp(static_cast<int>(std::lround(p.y - patch_size / 2.0)), 0, size.h - patch_size);
  return {x, y, patch_size, patch_size};
}

std::vector<Detection> score_locations(const RgbImage& image, std::string_view image_id,
                                       std::span<const ImagePoint> points, const PatchClassifier& classifier,
                                       int patch_size) {
  std::vector<PatchView> views;
  views.reserve(points.size());
  for (const ImagePoint& p : points) {
    if (!on_image(p, image.size())) throw ValidationError("score_locations: point off image");
    views.push_back({centered_window(p, image.size(), patch_size), std::nullopt});
  }
  const std::vector<double> probs = classifier.classify_batch(image, views);
  std::vector<Detection> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    out.push_back({std::string(image_id), points[i].x, points[i].y, std::clamp(probs[i], 0.0, 1.0)});
  return out;
}

std::vector<Detection> detect(const RgbImage& image, std::string_view image_id, const PatchClassifier& classifier,
                              const PipelineParams& params, const SaliencyProvider* provider) {
  const std::vector<ScoredBox> boxes = slide_classify(image, classifier, params);
  if (boxes.empty()) return {};
  const ScalarField field = provider ? provider->saliency(image, boxes, classifier)
                                     : saliency_map(image, boxes, classifier, params);
  const double peak = field.max();
  const std::vector<ImagePoint> points = extract_locations(field, params.hotspot_fraction * peak, params.hotspot_min_area);
  return score_locations(image, image_id, points, classifier, params.patch_size);
}

}  // namespace gazelabel
