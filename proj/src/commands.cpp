#include "gazelabel/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "gazelabel/consensus.hpp"
#include "gazelabel/heuristic.hpp"
#include "gazelabel/io.hpp"
#include "gazelabel/parallel.hpp"
#include "gazelabel/random.hpp"
#include "gazelabel/reference_classifier.hpp"
#include "gazelabel/synthetic.hpp"

namespace gazelabel {

namespace fs = std::filesystem;

namespace {

// One run per output directory at a time.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) : path_(dir / ".gazelabel.lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
      if (fs::exists(path_)) throw std::runtime_error("output directory is locked: " + path_.string());
      throw std::runtime_error("cannot write to output directory " + dir.string());
    }
    std::fclose(f);
  }
  ~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
};

fs::path require_path(const std::string& value, const char* what) {
  if (value.empty()) throw ValidationError(std::string("missing ") + what);
  return value;
}

fs::path out_dir(const RunConfig& cfg) { return require_path(cfg.out, "output directory (--out)"); }

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("error writing " + path.string());
}

io::OutputHeader header_for(const char* command, const RunConfig& cfg) { return {command, cfg.hash(), cfg.seed}; }

void write_config_record(const fs::path& dir, const char* command, const RunConfig& cfg) {
  const fs::path path = dir / (std::string(command) + ".config");
  std::ofstream out = open_output(path);
  io::write_header(out, header_for(command, cfg));
  out << cfg.canonical();
  finish(out, path);
}

void report_parse_errors(const std::vector<ParseError>& errors, std::ostream& log) {
  if (errors.empty()) return;
  log << errors.size() << " malformed gaze/display records skipped\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(errors.size(), 5); ++i)
    log << "  line " << errors[i].line << ": " << errors[i].message << '\n';
}

fs::path images_dir(const RunConfig& cfg) {
  if (!cfg.images.empty()) return cfg.images;
  return require_path(cfg.data, "data directory (--data) or image directory (--images)") / "images";
}

fs::path gt_path(const RunConfig& cfg, const std::string& fallback_dir) {
  if (!cfg.gt.empty()) return cfg.gt;
  return require_path(fallback_dir, "ground truth (--gt)") / "gt.csv";
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) throw ValidationError(std::string(what) + " not found: " + path.string());
}

struct LoadedImage {
  std::string id;
  RgbImage image;
};

std::vector<LoadedImage> load_images(const fs::path& dir) {
  const std::vector<fs::path> files = io::list_png(dir);
  std::vector<LoadedImage> images(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    images[i].id = files[i].stem().string();
    images[i].image = io::read_png(files[i]);
  });
  return images;
}

std::string fixed(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

GazeDataset load_gaze_dataset(const fs::path& dir) {
  const fs::path gaze = dir / "gaze.jsonl";
  const fs::path display = dir / "display.jsonl";
  require_file(gaze, "gaze log");
  require_file(display, "display log");
  std::ifstream din(display);
  DisplayLog dlog = parse_display_log(din);
  std::ifstream gin(gaze);
  GazeLog glog = parse_gaze_log(gin, dlog.records);

  GazeDataset ds;
  ds.errors = std::move(dlog.errors);
  ds.errors.insert(ds.errors.end(), glog.errors.begin(), glog.errors.end());
  ds.sequences = std::move(glog.sequences);
  std::set<std::string> ids;
  for (const GazeSequence& s : ds.sequences) ids.insert(s.participant_id);
  ds.participants.assign(ids.begin(), ids.end());
  return ds;
}

std::vector<double> pr_thresholds() {
  std::vector<double> t;
  for (int i = 1; i <= 19; ++i) t.push_back(i * 0.05);
  return t;
}

DetectionOutcome train_and_detect(std::span<const TrainingImage> train, std::span<const TrainingImage> val,
                                  std::span<const TrainingImage> test, const RunConfig& cfg, std::uint64_t seed) {
  DetectionOutcome outcome;
  outcome.training = train_two_iteration(
      train, val, [] { return std::make_unique<ReferenceClassifier>(); }, cfg.train, seed);

  std::vector<std::vector<Detection>> per_image(test.size());
  const PatchClassifier& clf = *outcome.training.classifier;
  parallel_for(test.size(), [&](std::size_t i) {
    per_image[i] = detect(*test[i].image, test[i].id, clf, cfg.train.pipeline);
  });
  PointsByImage gt;
  for (const TrainingImage& ti : test) gt[ti.id] = ti.labels;
  for (auto& d : per_image) outcome.detections.insert(outcome.detections.end(), d.begin(), d.end());

  std::vector<Detection> accepted;
  for (const Detection& d : outcome.detections)
    if (d.probability >= cfg.train.pipeline.positive_threshold) accepted.push_back(d);
  outcome.metrics = prf_pooled(points_by_image(accepted), gt, cfg.match_radius);
  const std::vector<double> thresholds = pr_thresholds();
  outcome.curve = pr_curve(outcome.detections, gt, cfg.match_radius, thresholds);
  return outcome;
}

void cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const fs::path out = out_dir(cfg);
  OutputLock lock(out);
  SlideSpec spec = cfg.slide;
  spec.seed = cfg.seed;
  const std::vector<SlideLayout> layouts = layout_slide(spec);
  const std::vector<ObserverModel> observers = default_observers(cfg.n_observers, cfg.observer);
  GazeSimOptions options;
  options.screen_w = cfg.screen_w;
  options.screen_h = cfg.screen_h;
  const std::vector<GazeSequence> gaze = gen_gaze(layouts, observers, derive_seed(cfg.seed, 0x67617a65), options);

  const fs::path img_dir = out / "images";
  fs::create_directories(img_dir);
  parallel_for(layouts.size(), [&](std::size_t i) {
    io::write_png(img_dir / (layouts[i].image_id + ".png"), render_image(spec, layouts[i]));
  });

  const io::OutputHeader header = header_for("simulate", cfg);
  PointsByImage mitoses, distractors;
  for (const SlideLayout& l : layouts) {
    mitoses[l.image_id] = l.mitoses;
    distractors[l.image_id] = l.distractors;
  }
  {
    const fs::path path = out / "gt.csv";
    std::ofstream f = open_output(path);
    io::write_header(f, header);
    io::write_points(f, mitoses);
    finish(f, path);
  }
  {
    const fs::path path = out / "distractors.csv";
    std::ofstream f = open_output(path);
    io::write_header(f, header);
    io::write_points(f, distractors);
    finish(f, path);
  }
  {
    const fs::path path = out / "manifest.csv";
    std::ofstream f = open_output(path);
    io::write_header(f, header);
    f << "image_id,positive,width,height\n";
    for (const SlideLayout& l : layouts)
      f << l.image_id << ',' << (l.positive ? 1 : 0) << ',' << l.size.w << ',' << l.size.h << '\n';
    finish(f, path);
  }
  {
    const fs::path path = out / "gaze.jsonl";
    std::ofstream f = open_output(path);
    serialize_gaze_log(f, gaze);
    finish(f, path);
  }
  {
    const fs::path path = out / "display.jsonl";
    std::ofstream f = open_output(path);
    serialize_display_log(f, gaze);
    finish(f, path);
  }
  write_config_record(out, "simulate", cfg);
  std::size_t n_mitoses = 0;
  for (const SlideLayout& l : layouts) n_mitoses += l.mitoses.size();
  log << "simulated " << layouts.size() << " images, " << n_mitoses << " mitoses, " << observers.size()
      << " observers, " << gaze.size() << " gaze sequences into " << out.string() << '\n';
}

void cmd_distill(const RunConfig& cfg, std::ostream& log) {
  const fs::path data = require_path(cfg.data, "data directory (--data)");
  const fs::path out = out_dir(cfg);
  GazeDataset ds = load_gaze_dataset(data);
  report_parse_errors(ds.errors, log);
  const int n = static_cast<int>(ds.participants.size());
  if (cfg.k > n)
    throw ValidationError("k = " + std::to_string(cfg.k) + " exceeds the " + std::to_string(n) +
                          " participants in the gaze log");
  const std::vector<std::string> group =
      cfg.k == n ? ds.participants : sample_groups(ds.participants, cfg.k, 1, derive_seed(cfg.seed, cfg.k)).front();

  OutputLock lock(out);
  const SequencesByImage by_image = group_by_image(std::move(ds.sequences));
  std::vector<const std::vector<GazeSequence>*> images;
  for (const auto& [_, seqs] : by_image) images.push_back(&seqs);
  std::vector<std::vector<ConsensusLabel>> per_image(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    per_image[i] = distill_labels(*images[i], group, cfg.distill, cfg.confidence_min);
  });
  std::vector<ConsensusLabel> labels;
  std::size_t labelled = 0;
  for (auto& l : per_image) {
    labelled += !l.empty();
    labels.insert(labels.end(), l.begin(), l.end());
  }

  const fs::path path = out / "labels.csv";
  std::ofstream f = open_output(path);
  io::write_header(f, header_for("distill", cfg));
  io::write_labels(f, labels);
  finish(f, path);
  log << "distilled " << labels.size() << " labels on " << labelled << " of " << images.size() << " images (k="
      << cfg.k << ")\n";
}

void cmd_heuristic(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = images_dir(cfg);
  const fs::path out = out_dir(cfg);
  const std::vector<fs::path> files = io::list_png(dir);
  OutputLock lock(out);
  std::vector<std::vector<ConsensusLabel>> per_image(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    per_image[i] = detect_brown(io::read_png(files[i]), cfg.hsv, files[i].stem().string());
  });
  std::vector<ConsensusLabel> labels;
  for (auto& l : per_image) labels.insert(labels.end(), l.begin(), l.end());

  const fs::path path = out / "labels.csv";
  std::ofstream f = open_output(path);
  io::write_header(f, header_for("heuristic", cfg));
  io::write_labels(f, labels);
  finish(f, path);
  log << "extracted " << labels.size() << " brown regions from " << files.size() << " images\n";
}

void cmd_eval(const RunConfig& cfg, std::ostream& log) {
  const fs::path labels_path = require_path(cfg.labels, "labels file (--labels)");
  const fs::path gt = gt_path(cfg, cfg.data);
  require_file(labels_path, "labels file");
  require_file(gt, "ground truth file");
  const PointsByImage pred = io::read_points(labels_path);
  const PointsByImage truth = io::read_points(gt);
  const MetricsReport m = prf_pooled(pred, truth, cfg.match_radius);

  const fs::path out = out_dir(cfg);
  OutputLock lock(out);
  const fs::path path = out / "metrics.csv";
  std::ofstream f = open_output(path);
  io::write_header(f, header_for("eval", cfg));
  f << "precision,recall,f1,tp,fp,fn,match_radius\n"
    << fixed(m.precision) << ',' << fixed(m.recall) << ',' << fixed(m.f1) << ',' << m.tp << ',' << m.fp << ','
    << m.fn << ',' << cfg.match_radius << '\n';
  finish(f, path);
  log << "precision " << fixed(m.precision) << "  recall " << fixed(m.recall) << "  f1 " << fixed(m.f1) << "  (tp "
      << m.tp << ", fp " << m.fp << ", fn " << m.fn << ")\n";
}

void cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  const fs::path data = require_path(cfg.data, "data directory (--data)");
  const fs::path gt = gt_path(cfg, cfg.data);
  require_file(gt, "ground truth file");
  GazeDataset ds = load_gaze_dataset(data);
  report_parse_errors(ds.errors, log);
  const PointsByImage truth = io::read_points(gt);
  if (cfg.sweep_k_max > static_cast<int>(ds.participants.size()))
    throw ValidationError("sweep.k_max = " + std::to_string(cfg.sweep_k_max) + " exceeds the " +
                          std::to_string(ds.participants.size()) + " participants in the gaze log");

  SweepOptions options;
  for (int k = cfg.sweep_k_min; k <= cfg.sweep_k_max; ++k) options.k_values.push_back(k);
  options.n_runs = cfg.sweep_runs;
  options.distill = cfg.distill;
  options.confidence_min = cfg.confidence_min;
  options.radius = cfg.match_radius;
  options.seed = cfg.seed;
  const SweepTable table = group_size_sweep(group_by_image(std::move(ds.sequences)), truth, options);

  const fs::path out = out_dir(cfg);
  OutputLock lock(out);
  const io::OutputHeader header = header_for("sweep", cfg);
  {
    const fs::path path = out / "sweep.csv";
    std::ofstream f = open_output(path);
    io::write_header(f, header);
    io::write_sweep(f, table);
    finish(f, path);
  }
  {
    const fs::path path = out / "sweep_summary.csv";
    std::ofstream f = open_output(path);
    io::write_header(f, header);
    io::write_sweep_summary(f, table);
    finish(f, path);
  }
  log << "k      precision        recall\n";
  for (const SweepSummary& s : table.summary)
    log << std::setw(2) << s.k << "  " << fixed(s.precision.mean) << " +- " << std::setprecision(3)
        << s.precision.std << "  " << fixed(s.recall.mean) << " +- " << s.recall.std << '\n';
}

void cmd_train_detect(const RunConfig& cfg, std::ostream& log) {
  const fs::path labels_path = require_path(cfg.labels, "labels file (--labels)");
  require_file(labels_path, "labels file");
  const fs::path test_dir = require_path(cfg.test_data, "test data directory (--test-data)");
  const fs::path test_gt = gt_path(cfg, cfg.test_data);
  require_file(test_gt, "test ground truth file");
  const fs::path out = out_dir(cfg);

  const PointsByImage labels = io::read_points(labels_path);
  const PointsByImage truth = io::read_points(test_gt);
  const std::vector<LoadedImage> train_pixels = load_images(images_dir(cfg));
  const std::vector<LoadedImage> test_pixels = load_images(test_dir / "images");
  if (train_pixels.size() < 2) throw ValidationError("train-detect needs at least 2 training images");
  if (test_pixels.empty()) throw ValidationError("no test images in " + (test_dir / "images").string());

  std::set<std::string> known;
  for (const LoadedImage& li : train_pixels) known.insert(li.id);
  std::size_t orphan = 0;
  for (const auto& [id, pts] : labels)
    if (!known.count(id)) orphan += pts.size();
  if (orphan) log << orphan << " labels reference images missing from the training set and are ignored\n";

  auto as_training = [](const std::vector<LoadedImage>& imgs, const PointsByImage& pts) {
    std::vector<TrainingImage> v;
    for (const LoadedImage& li : imgs) {
      auto it = pts.find(li.id);
      v.push_back({li.id, &li.image, it == pts.end() ? std::vector<ImagePoint>{} : it->second});
    }
    return v;
  };
  std::vector<TrainingImage> all = as_training(train_pixels, labels);
  const std::vector<TrainingImage> test = as_training(test_pixels, truth);

  Rng split_rng(derive_seed(cfg.seed, 0x73706c6974));
  std::shuffle(all.begin(), all.end(), split_rng);
  const std::size_t n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(cfg.val_fraction * static_cast<double>(all.size()))), 1, all.size() - 1);
  const std::vector<TrainingImage> val(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_val));
  const std::vector<TrainingImage> train(all.begin() + static_cast<std::ptrdiff_t>(n_val), all.end());

  OutputLock lock(out);
  const io::OutputHeader header = header_for("train-detect", cfg);
  std::vector<MetricsReport> reports;
  std::ostringstream rows;
  for (int s = 0; s < cfg.n_seeds; ++s) {
    const std::uint64_t seed = derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(s));
    const DetectionOutcome run = train_and_detect(train, val, test, cfg, seed);
    for (const std::string& w : run.training.warnings) log << "seed " << s << ": " << w << '\n';

    const fs::path dir = out / ("seed_" + std::to_string(s));
    fs::create_directories(dir);
    {
      const fs::path path = dir / "detections.csv";
      std::ofstream f = open_output(path);
      io::write_header(f, {"train-detect", header.config_hash, seed});
      io::write_detections(f, run.detections);
      finish(f, path);
    }
    {
      const fs::path path = dir / "pr_curve.csv";
      std::ofstream f = open_output(path);
      io::write_header(f, {"train-detect", header.config_hash, seed});
      io::write_pr_curve(f, run.curve);
      finish(f, path);
    }
    {
      const fs::path path = dir / "classifier.txt";
      std::ofstream f = open_output(path);
      dynamic_cast<const ReferenceClassifier&>(*run.training.classifier).save(f);
      finish(f, path);
    }
    const MetricsReport& m = run.metrics;
    reports.push_back(m);
    rows << s << ',' << seed << ',' << fixed(m.precision) << ',' << fixed(m.recall) << ',' << fixed(m.f1) << ','
         << m.tp << ',' << m.fp << ',' << m.fn << ',' << fixed(run.training.val_f1_iter1) << ','
         << fixed(run.training.val_f1_iter2) << '\n';
    log << "seed " << s << ": precision " << fixed(m.precision) << "  recall " << fixed(m.recall) << "  f1 "
        << fixed(m.f1) << '\n';
  }

  auto column = [&](double MetricsReport::*field) {
    std::vector<double> v;
    for (const MetricsReport& m : reports) v.push_back(m.*field);
    return describe(v);
  };
  const Stats p = column(&MetricsReport::precision);
  const Stats r = column(&MetricsReport::recall);
  const Stats f1 = column(&MetricsReport::f1);
  const fs::path path = out / "metrics.csv";
  std::ofstream f = open_output(path);
  io::write_header(f, header);
  f << "seed,run_seed,precision,recall,f1,tp,fp,fn,val_f1_iter1,val_f1_iter2\n" << rows.str();
  f << "mean,," << fixed(p.mean) << ',' << fixed(r.mean) << ',' << fixed(f1.mean) << ",,,,,\n";
  f << "std,," << fixed(p.std) << ',' << fixed(r.std) << ',' << fixed(f1.std) << ",,,,,\n";
  finish(f, path);
  log << "mean over " << reports.size() << " seeds: precision " << fixed(p.mean) << "  recall " << fixed(r.mean)
      << "  f1 " << fixed(f1.mean) << " (std " << fixed(f1.std) << ")\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Consensus labelling from eye-gaze, brown-pigment heuristics and detector training", "gazelabel"};
  app.require_subcommand(1);

  struct Flags {
    std::string config;
    std::vector<std::string> sets;
    std::map<std::string, std::string> values;  // config key -> raw flag value
  };
  Flags flags;

  struct Spec {
    const char* flag;
    const char* key;
    const char* help;
  };
  const std::vector<Spec> common = {
      {"--seed", "seed", "Random seed"},
      {"--out", "io.out", "Output directory"},
      {"--data", "io.data", "Dataset directory (images/, gt.csv, gaze.jsonl, display.jsonl)"},
      {"--images", "io.images", "Image directory (defaults to <data>/images)"},
      {"--labels", "io.labels", "Label CSV (image_id,x,y,...)"},
      {"--gt", "io.gt", "Ground-truth CSV"},
      {"--test-data", "io.test_data", "Test dataset directory for train-detect"},
      {"--k", "distill.k", "Participants per consensus group"},
      {"--sigma", "distill.sigma", "Gaussian sigma, px"},
      {"--radius", "distill.truncation_radius", "Kernel truncation radius, px"},
      {"--threshold-coef", "distill.threshold_coef", "Heatmap cutoff per participant"},
      {"--confidence-min", "distill.confidence_min", "Minimum gaze confidence"},
      {"--match-radius", "eval.match_radius", "Match radius for P/R/F1, px"},
      {"--n-runs", "sweep.n_runs", "Random groups per k in the sweep"},
      {"--n-seeds", "train.n_seeds", "Training repetitions"},
      {"--epochs", "train.epochs", "Training epochs per iteration"},
      {"--n-images", "sim.n_images", "Images to simulate"},
      {"--n-observers", "sim.n_observers", "Observers to simulate"},
  };

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"simulate", "Generate a synthetic slide dataset with gaze logs"},
      {"distill", "Consensus labels from the gaze of k participants"},
      {"heuristic", "Labels from brown-pigment colour thresholding"},
      {"eval", "Precision/recall/F1 of labels against ground truth"},
      {"sweep", "Consensus quality as a function of group size"},
      {"train-detect", "Train the patch classifier on labels and detect on test images"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "key = value config file");
    sub->add_option("--set", flags.sets, "Override any config key: --set section.key=value");
    for (const Spec& s : common)
      sub->add_option_function<std::string>(
          s.flag, [&flags, key = std::string(s.key)](const std::string& v) { flags.values[key] = v; }, s.help);
    // --min-area refers to whichever labeller the command runs.
    const std::string area_key = std::string(name) == "heuristic" ? "hsv.min_area" : "distill.min_area";
    sub->add_option_function<std::string>(
        "--min-area", [&flags, area_key](const std::string& v) { flags.values[area_key] = v; },
        "Minimum hotspot / region area, px");
    subs[name] = sub;
  }

  std::vector<std::string> argv_store{"gazelabel"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    RunConfig cfg;
    if (!flags.config.empty()) cfg.merge_file(flags.config);
    for (const std::string& s : flags.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + s + "'");
      cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, value] : flags.values) cfg.set(key, value);
    cfg.validate();

    const auto start = std::chrono::steady_clock::now();
    if (subs["simulate"]->parsed()) cmd_simulate(cfg, out);
    else if (subs["distill"]->parsed()) cmd_distill(cfg, out);
    else if (subs["heuristic"]->parsed()) cmd_heuristic(cfg, out);
    else if (subs["eval"]->parsed()) cmd_eval(cfg, out);
    else if (subs["sweep"]->parsed()) cmd_sweep(cfg, out);
    else cmd_train_detect(cfg, out);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << "done in " << std::fixed << std::setprecision(1) << secs << " s\n";
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace gazelabel
