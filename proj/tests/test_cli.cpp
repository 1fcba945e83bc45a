#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "gazelabel/commands.hpp"
#include "gazelabel/io.hpp"
#include "gazelabel/run_config.hpp"

using namespace gazelabel;
namespace fs = std::filesystem;

namespace {

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("gazelabel_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> simulate_args(const fs::path& out, int seed = 3) {
  return {"simulate", "--out", out.string(), "--seed", std::to_string(seed), "--n-images", "6", "--n-observers", "4",
          "--set", "sim.image_size=480"};
}

}  // namespace

TEST_CASE("config keys round trip through set and get") {
  RunConfig cfg;
  cfg.set("distill.sigma", "12.5");
  cfg.set("hsv.hue_min", "5");
  cfg.set("io.out", "/tmp/x");
  cfg.set("seed", "99");
  CHECK(cfg.distill.sigma == 12.5);
  CHECK(cfg.hsv.hue_min == 5.0);
  CHECK(cfg.out == "/tmp/x");
  CHECK(cfg.seed == 99);
  RunConfig copy;
  for (const std::string& key : RunConfig::keys()) copy.set(key, cfg.get(key));
  CHECK(copy.canonical() == cfg.canonical());
  CHECK(copy.hash() == cfg.hash());
  CHECK(cfg.hash().size() == 16);
  CHECK(RunConfig{}.hash() != cfg.hash());
}

TEST_CASE("config files accept sections and comments and reject unknown keys") {
  RunConfig cfg;
  cfg.merge_text("# comment\nseed = 4\n[distill]\nsigma = 8 ; trailing\nk = 7\n\n[hsv]\nmin_area=50\n");
  CHECK(cfg.seed == 4);
  CHECK(cfg.distill.sigma == 8.0);
  CHECK(cfg.k == 7);
  CHECK(cfg.hsv.min_area == 50.0);
  CHECK_THROWS_AS(cfg.merge_text("distill.sigmaa = 3\n"), ValidationError);
  CHECK_THROWS_AS(cfg.set("distill.sigma", "abc"), ValidationError);
  CHECK_THROWS_AS(cfg.merge_text("no equals sign\n"), ValidationError);
  cfg.set("distill.sigma", "-1");
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("simulate is reproducible for a fixed seed") {
  TempDir a, b, c;
  REQUIRE(cli(simulate_args(a.path / "d")).code == kExitOk);
  REQUIRE(cli(simulate_args(b.path / "d")).code == kExitOk);
  REQUIRE(cli(simulate_args(c.path / "d", 4)).code == kExitOk);
  for (const char* f : {"gt.csv", "gaze.jsonl", "display.jsonl", "manifest.csv", "distractors.csv"}) {
    CHECK(slurp(a.path / "d" / f) == slurp(b.path / "d" / f));
  }
  CHECK(slurp(a.path / "d" / "gaze.jsonl") != slurp(c.path / "d" / "gaze.jsonl"));
  CHECK(slurp(a.path / "d/images/img_0000.png") == slurp(b.path / "d/images/img_0000.png"));
  CHECK(io::list_png(a.path / "d/images").size() == 6);
  CHECK_FALSE(fs::exists(a.path / "d/.gazelabel.lock"));
  CHECK(fs::exists(a.path / "d/simulate.config"));
}

TEST_CASE("distill, heuristic and eval chain through CSV files") {
  TempDir t;
  const fs::path data = t.path / "data";
  REQUIRE(cli(simulate_args(data)).code == kExitOk);

  const Run d = cli({"distill", "--data", data.string(), "--out", (t.path / "gaze").string(), "--k", "4"});
  REQUIRE(d.code == kExitOk);
  const std::string labels = slurp(t.path / "gaze/labels.csv");
  CHECK(labels.rfind("#", 0) == 0);
  CHECK(labels.find("image_id,x,y") != std::string::npos);

  REQUIRE(cli({"heuristic", "--data", data.string(), "--out", (t.path / "heur").string()}).code == kExitOk);

  for (const char* src : {"gaze", "heur"}) {
    const fs::path dir = t.path / src;
    const Run e = cli({"eval", "--labels", (dir / "labels.csv").string(), "--data", data.string(), "--out",
                       (dir / "eval").string()});
    REQUIRE(e.code == kExitOk);
    const io::CsvTable m = io::read_csv_file(dir / "eval/metrics.csv");
    REQUIRE(m.rows.size() == 1);
    const double p = std::stod(m.rows[0][m.column("precision")]);
    const double r = std::stod(m.rows[0][m.column("recall")]);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("evaluating ground truth against itself is perfect, and reruns are identical") {
  TempDir t;
  const fs::path data = t.path / "data";
  REQUIRE(cli(simulate_args(data)).code == kExitOk);
  REQUIRE(cli({"eval", "--labels", (data / "gt.csv").string(), "--data", data.string(), "--out",
               (t.path / "e").string()})
              .code == kExitOk);
  const io::CsvTable m = io::read_csv_file(t.path / "e/metrics.csv");
  REQUIRE(m.rows.size() == 1);
  for (const char* col : {"precision", "recall", "f1"}) CHECK(std::stod(m.rows[0][m.column(col)]) == 1.0);

  for (const char* dir : {"a", "b"})
    REQUIRE(cli({"distill", "--data", data.string(), "--out", (t.path / dir).string(), "--k", "3"}).code == kExitOk);
  CHECK(slurp(t.path / "a/labels.csv") == slurp(t.path / "b/labels.csv"));
}

TEST_CASE("asking for more participants than logged is a validation error") {
  TempDir t;
  REQUIRE(cli(simulate_args(t.path / "data")).code == kExitOk);
  const Run r = cli({"distill", "--data", (t.path / "data").string(), "--out", (t.path / "o").string(), "--k", "5"});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("exceeds") != std::string::npos);
  CHECK_FALSE(fs::exists(t.path / "o/labels.csv"));
  const Run s = cli({"sweep", "--data", (t.path / "data").string(), "--out", (t.path / "s").string(), "--set",
                     "sweep.k_max=9"});
  CHECK(s.code == kExitValidation);
}

TEST_CASE("missing inputs and bad arguments exit with a validation error") {
  TempDir t;
  CHECK(cli({"eval", "--labels", (t.path / "nope.csv").string(), "--gt", (t.path / "gt.csv").string(), "--out",
             t.path.string()})
            .code == kExitValidation);
  CHECK(cli({"distill", "--data", (t.path / "missing").string(), "--out", t.path.string()}).code == kExitValidation);
  CHECK(cli({"distill", "--out", t.path.string()}).code == kExitValidation);
  CHECK(cli({"frobnicate"}).code == kExitValidation);
  CHECK(cli({"distill", "--set", "distill.nonsense=1"}).code == kExitValidation);
  CHECK(cli({"distill", "--sigma", "not-a-number"}).code == kExitValidation);
  CHECK(cli({"distill", "--config", (t.path / "absent.ini").string()}).code == kExitValidation);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("an empty image directory gives a header-only label file") {
  TempDir t;
  fs::create_directories(t.path / "images");
  REQUIRE(cli({"heuristic", "--images", (t.path / "images").string(), "--out", (t.path / "o").string()}).code ==
          kExitOk);
  const io::CsvTable table = io::read_csv_file(t.path / "o/labels.csv");
  CHECK(table.rows.empty());
  CHECK(table.column("image_id") == 0);
}

TEST_CASE("a locked output directory is refused") {
  TempDir t;
  fs::create_directories(t.path / "o");
  std::ofstream(t.path / "o/.gazelabel.lock") << "busy\n";
  fs::create_directories(t.path / "images");
  const Run r = cli({"heuristic", "--images", (t.path / "images").string(), "--out", (t.path / "o").string()});
  CHECK(r.code == kExitRuntime);
  CHECK(r.err.find("locked") != std::string::npos);
}

TEST_CASE("flags override --set, which overrides the config file") {
  TempDir t;
  const fs::path ini = t.path / "run.ini";
  std::ofstream(ini) << "[sim]\nn_images = 5\nimage_size = 480\nn_observers = 2\n";
  REQUIRE(cli({"simulate", "--config", ini.string(), "--set", "sim.n_images=3", "--out", (t.path / "a").string()})
              .code == kExitOk);
  CHECK(io::list_png(t.path / "a/images").size() == 3);
  REQUIRE(cli({"simulate", "--config", ini.string(), "--set", "sim.n_images=3", "--n-images", "2", "--out",
               (t.path / "b").string()})
              .code == kExitOk);
  CHECK(io::list_png(t.path / "b/images").size() == 2);
  const std::string cfg = slurp(t.path / "b/simulate.config");
  CHECK(cfg.find("sim.n_images=2") != std::string::npos);
}

TEST_CASE("train-detect writes per-seed outputs and a metrics summary") {
  TempDir t;
  REQUIRE(cli({"simulate", "--out", (t.path / "train").string(), "--seed", "5", "--n-images", "8", "--n-observers",
               "2", "--set", "sim.image_size=480", "--set", "sim.positive_fraction=0.75"})
              .code == kExitOk);
  REQUIRE(cli({"simulate", "--out", (t.path / "test").string(), "--seed", "6", "--n-images", "4", "--n-observers",
               "2", "--set", "sim.image_size=480"})
              .code == kExitOk);
  const Run r = cli({"train-detect", "--data", (t.path / "train").string(), "--labels",
                     (t.path / "train/gt.csv").string(), "--test-data", (t.path / "test").string(), "--out",
                     (t.path / "o").string(), "--n-seeds", "2", "--epochs", "3"});
  REQUIRE(r.code == kExitOk);
  for (const char* s : {"seed_0", "seed_1"}) {
    CHECK(fs::exists(t.path / "o" / s / "detections.csv"));
    CHECK(fs::exists(t.path / "o" / s / "pr_curve.csv"));
    CHECK(fs::exists(t.path / "o" / s / "classifier.txt"));
  }
  const io::CsvTable m = io::read_csv_file(t.path / "o/metrics.csv");
  REQUIRE(m.rows.size() == 4);
  CHECK(m.rows[2][0] == "mean");
  CHECK(m.rows[3][0] == "std");
}
