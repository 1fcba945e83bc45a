#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gazelabel/evaluation.hpp"
#include "gazelabel/gaze_model.hpp"
#include "gazelabel/run_config.hpp"
#include "gazelabel/training.hpp"

namespace gazelabel {

enum ExitCode { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

/// gaze.jsonl + display.jsonl of a dataset directory.
struct GazeDataset {
  std::vector<GazeSequence> sequences;
  std::vector<ParseError> errors;
  std::vector<std::string> participants;  ///< sorted, unique
};
GazeDataset load_gaze_dataset(const std::filesystem::path& dir);

/// 0.05, 0.10, ..., 0.95
std::vector<double> pr_thresholds();

struct DetectionOutcome {
  TrainResult training;
  std::vector<Detection> detections;  ///< every re-scored location, any probability
  MetricsReport metrics;              ///< at the pipeline's positive threshold
  std::vector<PrPoint> curve;
};

/// Trains the reference classifier on `train` (labels from any source),
/// then runs detection on `test` and scores it against the test images'
/// labels, which are taken as ground truth.
DetectionOutcome train_and_detect(std::span<const TrainingImage> train, std::span<const TrainingImage> val,
                                  std::span<const TrainingImage> test, const RunConfig& cfg, std::uint64_t seed);

/// Each command reads its inputs from the config, writes into config.out
/// and logs a short summary. Bad inputs throw ValidationError; I/O failures
/// throw std::runtime_error.
void cmd_simulate(const RunConfig& cfg, std::ostream& log);
void cmd_distill(const RunConfig& cfg, std::ostream& log);
void cmd_heuristic(const RunConfig& cfg, std::ostream& log);
void cmd_eval(const RunConfig& cfg, std::ostream& log);
void cmd_sweep(const RunConfig& cfg, std::ostream& log);
void cmd_train_detect(const RunConfig& cfg, std::ostream& log);

/// Full command line (without the program name). Returns an ExitCode.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gazelabel
