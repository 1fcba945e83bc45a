#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gazelabel/image.hpp"

namespace gazelabel {

/// One eye-tracker sample. Screen coordinates and confidence are absent when
/// the tracker reported "N/A"; such samples are never valid.
struct GazePoint {
  double t_ms = 0.0;
  std::optional<double> screen_x;
  std::optional<double> screen_y;
  std::optional<double> confidence;
  bool valid = false;

  bool usable() const { return valid && screen_x && screen_y && confidence; }
  bool operator==(const GazePoint&) const = default;
};

enum class Flip { none, horizontal, vertical };

struct Viewport {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double scale = 1.0;  ///< screen px per image px
  bool operator==(const Viewport&) const = default;
};

/// How one image was shown: rotated by `rotation` degrees, then flipped,
/// then placed on screen through `viewport`. An empty participant_id means
/// the record applies to every participant who viewed the image.
struct DisplayRecord {
  std::string image_id;
  std::string participant_id;
  int rotation = 0;
  Flip flip = Flip::none;
  Viewport viewport;
  ImageSize image_size{1600, 1600};

  /// Throws ValidationError on rotation outside {0,90,180,270}, scale <= 0
  /// or non-positive image size.
  void validate() const;
  /// Size of the image after rotation (w and h swap at 90/270).
  ImageSize displayed_size() const;
  bool operator==(const DisplayRecord&) const = default;
};

struct GazeSequence {
  std::string participant_id;
  std::string image_id;
  std::vector<GazePoint> points;
  DisplayRecord display;
  bool operator==(const GazeSequence&) const = default;
};

/// Image -> displayed-image coordinates (rotation, then flip).
ImagePoint display_transform(ImagePoint p, const DisplayRecord& d);
/// Displayed-image -> image coordinates (inverse flip, then inverse rotation).
ImagePoint inverse_display_transform(ImagePoint p, const DisplayRecord& d);
/// Image -> screen coordinates under the full display record.
ImagePoint image_to_screen(ImagePoint p, const DisplayRecord& d);

/// Screen -> image coordinates. The result may lie off-image; check with
/// on_image(). Throws ValidationError for an invalid record or unusable point.
ImagePoint project_to_image(const GazePoint& p, const DisplayRecord& d);

/// Keeps usable points with confidence >= confidence_min that project
/// on-image, preserving order.
GazeSequence filter_points(const GazeSequence& seq, double confidence_min);

/// Projects every point of an already filtered sequence.
std::vector<ImagePoint> project_sequence(const GazeSequence& seq);

struct ParseError {
  std::size_t line = 0;  ///< 1-based; 0 for sequence-level errors
  std::string message;
};

struct DisplayLog {
  std::vector<DisplayRecord> records;
  std::vector<ParseError> errors;
};

struct GazeLog {
  std::vector<GazeSequence> sequences;  ///< sorted by (image_id, participant_id)
  std::vector<ParseError> errors;
};

DisplayLog parse_display_log(std::istream& in);

/// Groups line-delimited gaze records into one sequence per
/// (participant_id, image_id), ordered by timestamp. Sequences without a
/// matching display record are dropped with a sequence-level error.
GazeLog parse_gaze_log(std::istream& in, const std::vector<DisplayRecord>& displays);

void serialize_gaze_log(std::ostream& out, const std::vector<GazeSequence>& sequences);
/// One record per sequence, always carrying participant_id.
void serialize_display_log(std::ostream& out, const std::vector<GazeSequence>& sequences);

const char* to_string(Flip f);
Flip flip_from_string(const std::string& s);

}  // namespace gazelabel
