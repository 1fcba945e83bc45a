#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gazelabel/consensus.hpp"
#include "gazelabel/detection.hpp"
#include "gazelabel/evaluation.hpp"
#include "gazelabel/image.hpp"

namespace gazelabel::io {

namespace fs = std::filesystem;

/// 8-bit RGB PNG. Alpha is dropped and grey is expanded on read.
RgbImage read_png(const fs::path& path);
void write_png(const fs::path& path, const RgbImage& image);

/// Provenance line written at the top of every CSV output, as a comment.
struct OutputHeader {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
};

void write_header(std::ostream& out, const OutputHeader& header);

/// Parses a CSV with a header row; lines starting with '#' are skipped.
/// Throws ValidationError when a required column is missing or a row is
/// malformed.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const fs::path& path);

/// `image_id,x,y,area,peak`
void write_labels(std::ostream& out, const std::vector<ConsensusLabel>& labels);
/// Reads any CSV with image_id, x and y columns (labels, ground truth).
PointsByImage read_points(const fs::path& path);
/// `image_id,x,y`
void write_points(std::ostream& out, const PointsByImage& points);

/// `image_id,x,y,probability`
void write_detections(std::ostream& out, const std::vector<Detection>& detections);
std::vector<Detection> read_detections(const fs::path& path);

/// `threshold,precision,recall`
void write_pr_curve(std::ostream& out, const std::vector<PrPoint>& curve);

/// `k,run,precision,recall,f1` plus participants/error columns.
void write_sweep(std::ostream& out, const SweepTable& table);
void write_sweep_summary(std::ostream& out, const SweepTable& table);

/// PNG files in a directory, sorted by name; the image id is the stem.
std::vector<fs::path> list_png(const fs::path& dir);

}  // namespace gazelabel::io
