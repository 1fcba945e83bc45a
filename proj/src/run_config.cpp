#include "gazelabel/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

namespace gazelabel {

namespace {

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if constexpr (std::is_floating_point_v<T>) {
    try {
      std::size_t pos = 0;
      v = std::stod(text, &pos);
      if (pos != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      throw ValidationError("config key '" + key + "': '" + text + "' is not a number");
    }
  } else {
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) throw ValidationError("config key '" + key + "': '" + text + "' is not an integer");
  }
  return v;
}

template <typename T>
std::string format_value(const T& v) {
  if constexpr (std::is_floating_point_v<T>) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  } else {
    return std::to_string(v);
  }
}

template <typename T>
Key numeric(std::string name, T& (*ref)(RunConfig&)) {
  return {name,
          [ref, name](RunConfig& c, const std::string& s) { ref(c) = parse_value<T>(name, s); },
          [ref](const RunConfig& c) { return format_value(ref(const_cast<RunConfig&>(c))); }};
}

Key text(std::string name, std::string& (*ref)(RunConfig&)) {
  return {name, [ref](RunConfig& c, const std::string& s) { ref(c) = s; },
          [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)); }};
}

#define GL_NUM(key, T, member) numeric<T>(key, +[](RunConfig& c) -> T& { return c.member; })
#define GL_STR(key, member) text(key, +[](RunConfig& c) -> std::string& { return c.member; })

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = {
      GL_NUM("seed", std::uint64_t, seed),
      GL_NUM("distill.sigma", double, distill.sigma),
      GL_NUM("distill.truncation_radius", double, distill.truncation_radius),
      GL_NUM("distill.threshold_coef", double, distill.threshold_coef),
      GL_NUM("distill.min_area", double, distill.min_area),
      GL_NUM("distill.confidence_min", double, confidence_min),
      GL_NUM("distill.k", int, k),
      GL_NUM("hsv.hue_min", double, hsv.hue_min),
      GL_NUM("hsv.hue_max", double, hsv.hue_max),
      GL_NUM("hsv.sat_min", double, hsv.sat_min),
      GL_NUM("hsv.sat_max", double, hsv.sat_max),
      GL_NUM("hsv.val_min", double, hsv.val_min),
      GL_NUM("hsv.val_max", double, hsv.val_max),
      GL_NUM("hsv.min_area", double, hsv.min_area),
      GL_NUM("pipeline.patch_size", int, train.pipeline.patch_size),
      GL_NUM("pipeline.stride", int, train.pipeline.stride),
      GL_NUM("pipeline.positive_threshold", double, train.pipeline.positive_threshold),
      GL_NUM("pipeline.occlusion_size", int, train.pipeline.occlusion_size),
      GL_NUM("pipeline.occlusion_stride", int, train.pipeline.occlusion_stride),
      GL_NUM("pipeline.hotspot_fraction", double, train.pipeline.hotspot_fraction),
      GL_NUM("pipeline.hotspot_min_area", double, train.pipeline.hotspot_min_area),
      GL_NUM("train.epochs", int, train.fit.epochs),
      GL_NUM("train.learning_rate", double, train.fit.learning_rate),
      GL_NUM("train.l2", double, train.fit.l2),
      GL_NUM("train.margin_lo", double, train.margin_lo),
      GL_NUM("train.margin_hi", double, train.margin_hi),
      GL_NUM("train.positive_jitter", int, train.positive_jitter),
      GL_NUM("train.jitter_px", int, train.jitter_px),
      GL_NUM("train.positive_core_margin", int, train.positive_core_margin),
      GL_NUM("train.n_seeds", int, n_seeds),
      GL_NUM("train.val_fraction", double, val_fraction),
      GL_NUM("eval.match_radius", double, match_radius),
      GL_NUM("sweep.k_min", int, sweep_k_min),
      GL_NUM("sweep.k_max", int, sweep_k_max),
      GL_NUM("sweep.n_runs", int, sweep_runs),
      GL_NUM("sim.n_images", int, slide.n_images),
      GL_NUM("sim.image_size", int, slide.image_size),
      GL_NUM("sim.mitosis_rate", double, slide.mitosis_rate),
      GL_NUM("sim.distractor_rate", double, slide.distractor_rate),
      GL_NUM("sim.nuclei_density", double, slide.nuclei_density),
      GL_NUM("sim.positive_fraction", double, slide.positive_fraction),
      GL_NUM("sim.mimic_fraction", double, slide.mimic_fraction),
      GL_NUM("sim.n_observers", int, n_observers),
      GL_NUM("sim.hit_rate", double, observer.hit_rate),
      GL_NUM("sim.dwell_ms", double, observer.dwell_ms),
      GL_NUM("sim.dwell_spread", double, observer.dwell_spread),
      GL_NUM("sim.dispersion", double, observer.dispersion),
      GL_NUM("sim.false_fixations", double, observer.false_fixations),
      GL_NUM("sim.false_dwell_ms", double, observer.false_dwell_ms),
      GL_NUM("sim.distractor_attraction", double, observer.distractor_attraction),
      GL_NUM("sim.sample_rate", double, observer.sample_rate),
      GL_NUM("sim.dropout", double, observer.dropout),
      GL_NUM("sim.screen_w", int, screen_w),
      GL_NUM("sim.screen_h", int, screen_h),
      GL_STR("io.data", data),
      GL_STR("io.images", images),
      GL_STR("io.labels", labels),
      GL_STR("io.gt", gt),
      GL_STR("io.test_data", test_data),
      GL_STR("io.out", out),
  };
  return table;
}

#undef GL_NUM
#undef GL_STR

const Key& find_key(const std::string& name) {
  for (const Key& k : key_table())
    if (k.name == name) return k;
  throw ValidationError("unknown config key '" + name + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) { find_key(key).set(*this, trim(value)); }

std::string RunConfig::get(const std::string& key) const { return find_key(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const Key& k : key_table()) v.push_back(k.name);
    return v;
  }();
  return names;
}

void RunConfig::merge_text(const std::string& text) {
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError("config line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    set(section.empty() ? key : section + "." + key, line.substr(eq + 1));
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  merge_text(buf.str());
}

void RunConfig::validate() const {
  distill.validate();
  if (!(confidence_min >= 0.0 && confidence_min <= 1.0)) throw ValidationError("distill.confidence_min must lie in [0, 1]");
  if (k < 1) throw ValidationError("distill.k must be >= 1");
  hsv.validate();
  train.validate();
  if (train.fit.epochs < 0 || !(train.fit.learning_rate > 0.0) || !(train.fit.l2 >= 0.0))
    throw ValidationError("train.epochs, train.learning_rate and train.l2 must be valid");
  if (n_seeds < 1) throw ValidationError("train.n_seeds must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ValidationError("train.val_fraction must lie in (0, 1)");
  if (!(match_radius > 0.0)) throw ValidationError("eval.match_radius must be > 0");
  if (sweep_k_min < 1 || sweep_k_max < sweep_k_min) throw ValidationError("sweep.k_min/k_max must satisfy 1 <= min <= max");
  if (sweep_runs < 1) throw ValidationError("sweep.n_runs must be >= 1");
  slide.validate();
  observer.validate();
  if (n_observers < 1) throw ValidationError("sim.n_observers must be >= 1");
  if (screen_w <= 0 || screen_h <= 0) throw ValidationError("sim.screen_w/screen_h must be > 0");
}

std::string RunConfig::canonical() const {
  std::vector<std::string> lines;
  for (const Key& k : key_table()) lines.push_back(k.name + "=" + k.get(*this));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const std::string& l : lines) out += l + "\n";
  return out;
}

std::string RunConfig::hash() const {
  // File locations do not change results, so io.* keys stay out of the hash.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::istringstream lines(canonical());
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind("io.", 0) == 0) continue;
    for (unsigned char c : line + "\n") {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gazelabel
