#include "gazelabel/gaze_model.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <ostream>
#include <tuple>

#include <json.hpp>

namespace gazelabel {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(Flip f) {
  switch (f) {
    case Flip::none: return "none";
    case Flip::horizontal: return "horizontal";
    case Flip::vertical: return "vertical";
  }
  return "none";
}

Flip flip_from_string(const std::string& s) {
  if (s == "none") return Flip::none;
  if (s == "horizontal") return Flip::horizontal;
  if (s == "vertical") return Flip::vertical;
  throw ValidationError("unknown flip '" + s + "'");
}

void DisplayRecord::validate() const {
  if (rotation != 0 && rotation != 90 && rotation != 180 && rotation != 270)
    throw ValidationError("display record " + image_id + ": rotation must be 0, 90, 180 or 270");
  if (!(viewport.scale > 0.0)) throw ValidationError("display record " + image_id + ": viewport scale must be > 0");
  if (image_size.w <= 0 || image_size.h <= 0)
    throw ValidationError("display record " + image_id + ": image size must be positive");
}

ImageSize DisplayRecord::displayed_size() const {
  if (rotation == 90 || rotation == 270) return {image_size.h, image_size.w};
  return image_size;
}

ImagePoint display_transform(ImagePoint p, const DisplayRecord& d) {
  const double w = d.image_size.w, h = d.image_size.h;
  ImagePoint r = p;
  switch (d.rotation) {
    case 90: r = {p.y, w - p.x}; break;
    case 180: r = {w - p.x, h - p.y}; break;
    case 270: r = {h - p.y, p.x}; break;
    default: break;
  }
  const ImageSize ds = d.displayed_size();
  if (d.flip == Flip::horizontal) r.x = ds.w - r.x;
  if (d.flip == Flip::vertical) r.y = ds.h - r.y;
  return r;
}

ImagePoint inverse_display_transform(ImagePoint p, const DisplayRecord& d) {
  const ImageSize ds = d.displayed_size();
  ImagePoint u = p;
  if (d.flip == Flip::horizontal) u.x = ds.w - u.x;
  if (d.flip == Flip::vertical) u.y = ds.h - u.y;
  const double w = d.image_size.w, h = d.image_size.h;
  switch (d.rotation) {
    case 90: return {w - u.y, u.x};
    case 180: return {w - u.x, h - u.y};
    case 270: return {u.y, h - u.x};
    default: return u;
  }
}

ImagePoint image_to_screen(ImagePoint p, const DisplayRecord& d) {
  const ImagePoint u = display_transform(p, d);
  return {d.viewport.origin_x + d.viewport.scale * u.x, d.viewport.origin_y + d.viewport.scale * u.y};
}

ImagePoint project_to_image(const GazePoint& p, const DisplayRecord& d) {
  d.validate();
  if (!p.screen_x || !p.screen_y) throw ValidationError("project_to_image: point has no coordinates");
  const ImagePoint u{(*p.screen_x - d.viewport.origin_x) / d.viewport.scale,
                     (*p.screen_y - d.viewport.origin_y) / d.viewport.scale};
  return inverse_display_transform(u, d);
}

GazeSequence filter_points(const GazeSequence& seq, double confidence_min) {
  if (!(confidence_min >= 0.0 && confidence_min <= 1.0))
    throw ValidationError("filter_points: confidence_min must lie in [0, 1]");
  seq.display.validate();
  GazeSequence out;
  out.participant_id = seq.participant_id;
  out.image_id = seq.image_id;
  out.display = seq.display;
  for (const GazePoint& p : seq.points) {
    if (!p.usable() || *p.confidence < confidence_min) continue;
    if (!on_image(project_to_image(p, seq.display), seq.display.image_size)) continue;
    out.points.push_back(p);
  }
  return out;
}

std::vector<ImagePoint> project_sequence(const GazeSequence& seq) {
  std::vector<ImagePoint> out;
  out.reserve(seq.points.size());
  for (const GazePoint& p : seq.points) out.push_back(project_to_image(p, seq.display));
  return out;
}

namespace {

// Accepts a number, or "N/A" / null as missing.
std::optional<double> optional_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'");
  if (it->is_null()) return std::nullopt;
  if (it->is_string()) {
    if (it->get<std::string>() == "N/A") return std::nullopt;
    throw ValidationError(std::string("field '") + key + "' is not a number");
  }
  if (!it->is_number()) throw ValidationError(std::string("field '") + key + "' is not a number");
  return it->get<double>();
}

double required_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number())
    throw ValidationError(std::string("missing or non-numeric field '") + key + "'");
  return it->get<double>();
}

std::string required_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw ValidationError(std::string("missing or non-string field '") + key + "'");
  return it->get<std::string>();
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

ordered_json number_or_na(const std::optional<double>& v) {
  if (v) return *v;
  return "N/A";
}

}  // namespace

DisplayLog parse_display_log(std::istream& in) {
  DisplayLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw ValidationError("record is not an object");
      DisplayRecord d;
      d.image_id = required_string(j, "image_id");
      if (auto it = j.find("participant_id"); it != j.end()) {
        if (!it->is_string()) throw ValidationError("field 'participant_id' is not a string");
        d.participant_id = it->get<std::string>();
      }
      const double rot = required_number(j, "rotation");
      d.rotation = static_cast<int>(rot);
      if (d.rotation != rot) throw ValidationError("rotation must be an integer");
      d.flip = flip_from_string(required_string(j, "flip"));
      auto vp = j.find("viewport");
      if (vp == j.end() || !vp->is_object()) throw ValidationError("missing object field 'viewport'");
      d.viewport.origin_x = required_number(*vp, "origin_x");
      d.viewport.origin_y = required_number(*vp, "origin_y");
      d.viewport.scale = required_number(*vp, "scale");
      d.image_size.w = static_cast<int>(required_number(j, "image_w"));
      d.image_size.h = static_cast<int>(required_number(j, "image_h"));
      d.validate();
      log.records.push_back(std::move(d));
    } catch (const std::exception& e) {
      log.errors.push_back({lineno, e.what()});
    }
  }
  return log;
}

GazeLog parse_gaze_log(std::istream& in, const std::vector<DisplayRecord>& displays) {
  GazeLog log;

  using Key = std::pair<std::string, std::string>;  // (image_id, participant_id)
  std::map<Key, const DisplayRecord*> display_index;
  for (const DisplayRecord& d : displays) display_index.emplace(Key{d.image_id, d.participant_id}, &d);

  std::map<Key, std::vector<GazePoint>> grouped;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw ValidationError("record is not an object");
      GazePoint p;
      const std::string participant = required_string(j, "participant_id");
      const std::string image = required_string(j, "image_id");
      p.t_ms = required_number(j, "t_ms");
      if (p.t_ms < 0.0) throw ValidationError("t_ms must be >= 0");
      p.screen_x = optional_number(j, "screen_x");
      p.screen_y = optional_number(j, "screen_y");
      p.confidence = optional_number(j, "confidence");
      if (p.confidence && (*p.confidence < 0.0 || *p.confidence > 1.0))
        throw ValidationError("confidence must lie in [0, 1]");
      auto v = j.find("valid");
      if (v == j.end() || !v->is_boolean()) throw ValidationError("missing or non-boolean field 'valid'");
      p.valid = v->get<bool>() && p.screen_x && p.screen_y && p.confidence;
      grouped[Key{image, participant}].push_back(p);
    } catch (const std::exception& e) {
      log.errors.push_back({lineno, e.what()});
    }
  }

  for (auto& [key, points] : grouped) {
    const auto& [image, participant] = key;
    auto it = display_index.find(key);
    if (it == display_index.end()) it = display_index.find(Key{image, std::string{}});
    if (it == display_index.end()) {
      log.errors.push_back({0, "no display record for participant '" + participant + "' image '" + image + "'"});
      continue;
    }
    std::stable_sort(points.begin(), points.end(),
                     [](const GazePoint& a, const GazePoint& b) { return a.t_ms < b.t_ms; });
    GazeSequence seq;
    seq.participant_id = participant;
    seq.image_id = image;
    seq.points = std::move(points);
    seq.display = *it->second;
    seq.display.participant_id = participant;
    log.sequences.push_back(std::move(seq));
  }
  return log;
}

void serialize_gaze_log(std::ostream& out, const std::vector<GazeSequence>& sequences) {
  for (const GazeSequence& s : sequences) {
    for (const GazePoint& p : s.points) {
      ordered_json j;
      j["participant_id"] = s.participant_id;
      j["image_id"] = s.image_id;
      j["t_ms"] = p.t_ms;
      j["screen_x"] = number_or_na(p.screen_x);
      j["screen_y"] = number_or_na(p.screen_y);
      j["confidence"] = number_or_na(p.confidence);
      j["valid"] = p.valid;
      out << j.dump() << '\n';
    }
  }
}

void serialize_display_log(std::ostream& out, const std::vector<GazeSequence>& sequences) {
  for (const GazeSequence& s : sequences) {
    const DisplayRecord& d = s.display;
    ordered_json j;
    j["image_id"] = s.image_id;
    j["participant_id"] = s.participant_id;
    j["rotation"] = d.rotation;
    j["flip"] = to_string(d.flip);
    j["viewport"] = {{"origin_x", d.viewport.origin_x}, {"origin_y", d.viewport.origin_y}, {"scale", d.viewport.scale}};
    j["image_w"] = d.image_size.w;
    j["image_h"] = d.image_size.h;
    out << j.dump() << '\n';
  }
}

}  // namespace gazelabel
