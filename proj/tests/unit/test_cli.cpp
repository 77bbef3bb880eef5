#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "camo/cli.hpp"
#include "camo/evaluator.hpp"
#include "camo/toy_detector.hpp"
#include "test_util.hpp"

namespace camo {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string last_line(const std::string& text) {
  std::string t = text;
  while (!t.empty() && t.back() == '\n') t.pop_back();
  const auto pos = t.rfind('\n');
  return pos == std::string::npos ? t : t.substr(pos + 1);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& path) { return nlohmann::json::parse(slurp(path)); }

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("camo_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string path(const std::string& rel) const { return (root_ / rel).string(); }

  // Small synthetic dataset at the tiny detector's input size.
  std::string make_dataset(const std::string& name, int seed = 3) {
    const Outcome o = run({"synth-data", "--run-dir", path(name), "--count", "4", "--image-size", "64",
                           "--min-span", "16", "--max-span", "24", "--seed", std::to_string(seed)});
    EXPECT_EQ(o.code, 0) << o.err;
    return path(name + "/dataset/manifest.json");
  }

  // Untrained tiny detector with a raised objectness bias, so clean images
  // give a non-empty set of reference boxes.
  std::string make_detector() {
    ToyDetector det(testing::tiny_architecture(), 5);
    auto p = det.flatten_parameters();
    p[p.size() - 2] = 2.0;
    det.assign_parameters(p);
    det.save(root_ / "detector.bin");
    return path("detector.bin");
  }

  fs::path root_;
};

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  const Outcome o = run({"synth-data", "--no-such-flag", "--out", path("runs")});
  EXPECT_EQ(o.code, 2);
  EXPECT_EQ(last_line(o.err).rfind("error: kind=usage code=2 message=\"", 0), 0u);
  EXPECT_EQ(run({"synth-data", "--count", "many", "--out", path("runs")}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_FALSE(fs::exists(root_ / "runs"));
}

TEST_F(CliTest, MissingInputExitsWithThreeBeforeCreatingRunDir) {
  const Outcome o = run({"train-patch", "--data", path("nope.json"), "--detector", path("nope.bin"),
                         "--out", path("runs")});
  EXPECT_EQ(o.code, 3);
  const std::string line = last_line(o.err);
  EXPECT_TRUE(std::regex_match(line, std::regex(R"(error: kind=missing-input code=3 message="[^\n]*")")))
      << line;
  EXPECT_EQ(o.err.find('\n'), o.err.size() - 1);
  EXPECT_FALSE(fs::exists(root_ / "runs"));
  EXPECT_EQ(run({"synth-data", "--config", path("absent.json"), "--out", path("runs")}).code, 3);
  EXPECT_EQ(run({"plot", path("absent.json"), "--out", path("runs")}).code, 3);
}

TEST_F(CliTest, ValidationErrorsExitWithFour) {
  const std::string data = make_dataset("d");
  const std::string det = make_detector();
  const Outcome o = run({"train-patch", "--data", data, "--detector", det, "--epochs", "0",
                         "--run-dir", path("bad")});
  EXPECT_EQ(o.code, 4);
  EXPECT_EQ(last_line(o.err).rfind("error: kind=validation code=4", 0), 0u);
  EXPECT_EQ(run({"synth-data", "--max-planes", "0", "--run-dir", path("bad2")}).code, 4);
}

TEST_F(CliTest, RunDirectoryNameAndConfigSnapshot) {
  const Outcome o = run({"synth-data", "--count", "1", "--image-size", "64", "--min-span", "16",
                         "--max-span", "24", "--seed", "7", "--out", path("runs")});
  ASSERT_EQ(o.code, 0) << o.err;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root_ / "runs")) dirs.push_back(e.path());
  ASSERT_EQ(dirs.size(), 1u);
  EXPECT_TRUE(std::regex_match(dirs[0].filename().string(), std::regex(R"(\d{8}T\d{6}Z-seed7)")))
      << dirs[0];
  const auto resolved = read_json(dirs[0] / "resolved_config.json");
  EXPECT_EQ(resolved.at("command"), "synth-data");
  EXPECT_EQ(resolved.at("params").at("seed"), 7);
  EXPECT_EQ(resolved.at("params").at("count"), 1);
  EXPECT_EQ(resolved.at("params").at("max_planes"), 3);
  EXPECT_TRUE(fs::exists(dirs[0] / "run.json"));
}

TEST_F(CliTest, FlagsOverrideConfigFileOverrideDefaults) {
  write_file(root_ / "cfg.json", R"({"params": {"count": 3, "image_size": 64, "seed": 11, "min_span": 16, "max_span": 24}})");
  const Outcome o = run({"synth-data", "--config", path("cfg.json"), "--count", "2", "--run-dir",
                         path("r")});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto p = read_json(root_ / "r" / "resolved_config.json").at("params");
  EXPECT_EQ(p.at("count"), 2);
  EXPECT_EQ(p.at("image_size"), 64);
  EXPECT_EQ(p.at("seed"), 11);
  EXPECT_EQ(p.at("max_span"), 24.0);
  EXPECT_EQ(p.at("max_clutter"), 4);
  EXPECT_EQ(read_json(root_ / "r" / "dataset" / "manifest.json").at("entries").size(), 2u);

  write_file(root_ / "flat.json", R"({"count": 1, "image_size": 64, "min_span": 16, "max_span": 24})");
  ASSERT_EQ(run({"synth-data", "--config", path("flat.json"), "--run-dir", path("f")}).code, 0);
  EXPECT_EQ(read_json(root_ / "f" / "resolved_config.json").at("params").at("count"), 1);

  write_file(root_ / "unknown.json", R"({"count": 1, "colour": "red"})");
  EXPECT_EQ(run({"synth-data", "--config", path("unknown.json"), "--run-dir", path("u")}).code, 2);
  write_file(root_ / "typed.json", R"({"count": "three"})");
  EXPECT_EQ(run({"synth-data", "--config", path("typed.json"), "--run-dir", path("t")}).code, 2);
}

TEST_F(CliTest, EndToEndPipelineIsReproducible) {
  const std::string data = make_dataset("data");
  const std::string det = make_detector();

  const Outcome clean = run({"evaluate", "--data", data, "--detector", det, "--condition", "clean",
                             "--run-dir", path("clean")});
  ASSERT_EQ(clean.code, 0) << clean.err;
  EXPECT_DOUBLE_EQ(EvalReport::load(root_ / "clean" / "report.json").ap, 1.0);

  const std::vector<std::string> train{"train-patch", "--data", data, "--detector", det,
                                       "--patch-height", "6", "--patch-width", "6",
                                       "--geometry", "large", "--epochs", "2", "--batch-size", "2",
                                       "--checkpoint-every", "1"};
  auto with_dir = [](std::vector<std::string> args, const std::string& dir) {
    args.push_back("--run-dir");
    args.push_back(dir);
    return args;
  };
  const Outcome t1 = run(with_dir(train, path("train1")));
  ASSERT_EQ(t1.code, 0) << t1.err;
  const Outcome t2 = run(with_dir(train, path("train2")));
  ASSERT_EQ(t2.code, 0) << t2.err;
  EXPECT_EQ(slurp(root_ / "train1" / "patch.png"), slurp(root_ / "train2" / "patch.png"));
  EXPECT_EQ(slurp(root_ / "train1" / "patch.png.json"), slurp(root_ / "train2" / "patch.png.json"));
  EXPECT_EQ(slurp(root_ / "train1" / "log.jsonl"), slurp(root_ / "train2" / "log.jsonl"));
  EXPECT_TRUE(fs::exists(root_ / "train1" / "checkpoints" / "epoch_0002" / "state.json"));

  const Outcome resumed =
      run(with_dir({"train-patch", "--data", data, "--detector", det, "--patch-height", "6",
                    "--patch-width", "6", "--geometry", "large", "--epochs", "2", "--batch-size",
                    "2", "--resume", path("train1/checkpoints/epoch_0001")},
                   path("train3")));
  ASSERT_EQ(resumed.code, 0) << resumed.err;
  EXPECT_EQ(slurp(root_ / "train3" / "patch.png"), slurp(root_ / "train1" / "patch.png"));

  const std::string patch = path("train1/patch.png");
  for (const char* cond : {"patch", "noise"}) {
    for (const char* dir : {"a", "b"}) {
      const Outcome e = run({"evaluate", "--data", data, "--detector", det, "--condition", cond,
                             "--patch", patch, "--seed", "9", "--run-dir",
                             path(std::string(cond) + dir)});
      ASSERT_EQ(e.code, 0) << e.err;
    }
    EXPECT_EQ(slurp(root_ / (std::string(cond) + "a") / "report.json"),
              slurp(root_ / (std::string(cond) + "b") / "report.json"));
    EXPECT_EQ(slurp(root_ / (std::string(cond) + "a") / "report.csv"),
              slurp(root_ / (std::string(cond) + "b") / "report.csv"));
  }
  const auto report = EvalReport::load(root_ / "patcha" / "report.json");
  ASSERT_TRUE(report.patch_config.has_value());
  EXPECT_EQ(*report.patch_config, PatchConfig::large());

  const Outcome applied = run({"apply", "--data", data, "--patch", patch, "--run-dir", path("applied")});
  ASSERT_EQ(applied.code, 0) << applied.err;
  EXPECT_EQ(read_json(root_ / "applied" / "patched" / "manifest.json").at("entries").size(), 4u);

  const Outcome plot = run({"plot", path("clean/report.json"), path("noisea/report.json"),
                            path("patcha/report.json"), "--run-dir", path("plot")});
  ASSERT_EQ(plot.code, 0) << plot.err;
  EXPECT_GT(fs::file_size(root_ / "plot" / "pr.svg"), 0u);
  EXPECT_GT(fs::file_size(root_ / "plot" / "pr.png"), 0u);
}

TEST_F(CliTest, NoiseNeedsASize) {
  const std::string data = make_dataset("data");
  const std::string det = make_detector();
  EXPECT_EQ(run({"evaluate", "--data", data, "--detector", det, "--condition", "noise", "--run-dir",
                 path("n")})
                .code,
            2);
  const Outcome o = run({"evaluate", "--data", data, "--detector", det, "--condition", "noise",
                         "--noise-size", "6", "--geometry", "large", "--run-dir", path("n2")});
  EXPECT_EQ(o.code, 0) << o.err;
}

TEST_F(CliTest, SynthWithSplitAndDetectorTraining) {
  ASSERT_EQ(run({"synth-data", "--count", "4", "--image-size", "64", "--test-fraction", "0.25",
                 "--min-span", "16", "--max-span", "24", "--run-dir", path("s")})
                .code,
            0);
  EXPECT_TRUE(fs::exists(root_ / "s" / "dataset" / "train.json"));
  const Outcome o = run({"train-detector", "--data", path("s/dataset/train.json"), "--holdout",
                         path("s/dataset/test.json"), "--input-size", "64", "--epochs", "1",
                         "--run-dir", path("det")});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(fs::exists(root_ / "det" / "detector.bin"));
  EXPECT_TRUE(read_json(root_ / "det" / "summary.json").contains("holdout_ap"));
}

}  // namespace
}  // namespace camo
