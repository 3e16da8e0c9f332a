// Copyright 2026 The tilscore Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "test_support.hpp"
#include "tilscore/detection.hpp"
#include "tilscore/error.hpp"
#include "tilscore/raster_io.hpp"
#include "tilscore_cli/commands.hpp"
#include "tilscore_cli/config.hpp"
#include "tilscore_cli/synth.hpp"

namespace tilscore::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tilscore");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return main_entry(static_cast<int>(argv.size()), argv.data());
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Config, RoundTrip) {
  RunConfig cfg = parse_config(
      "# comment\n"
      "segmentation.tau_tumor = 0.25\n"
      "detection.models = constant:0.4, identity\n"
      "detection.ensemble_size = 2\n"
      "metrics.fp_rates = 1, 2.5\n"
      "scoring.rounding = half_up\n");
  EXPECT_DOUBLE_EQ(cfg.pipeline.segmentation.tau_tumor, 0.25);
  EXPECT_EQ(cfg.detection_models.size(), 2u);
  EXPECT_EQ(cfg.metrics.fp_rates, (std::vector<double>{1.0, 2.5}));
  const std::string text = serialize_config(cfg);
  const RunConfig again = parse_config(text);
  EXPECT_EQ(serialize_config(again), text);
  EXPECT_TRUE(again.defaults_applied.empty());
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("segmentation.tau_tumour = 0.2\n"), ConfigError);
  EXPECT_THROW(parse_config("detection.det_threshold = 0.3\ndetection.det_threshold = 0.4\n"), ConfigError);
  EXPECT_THROW(parse_config("detection.det_threshold 0.3\n"), ConfigError);
  EXPECT_THROW(parse_config("detection.det_threshold = abc\n"), ConfigError);
  EXPECT_THROW(parse_config("detection.connectivity = 6\n"), ConfigError);
  EXPECT_THROW(parse_config("segmentation.models = intensity_heuristic\n"), ConfigError);
  EXPECT_THROW(parse_config("segmentation.ensemble_size = 3\nsegmentation.models = identity, identity\n"), ConfigError);
}

TEST(Config, DefaultsRecorded) {
  const RunConfig cfg = parse_config("segmentation.stride = 256\n");
  EXPECT_DOUBLE_EQ(cfg.pipeline.detection.det_threshold, 0.3);
  const auto& d = cfg.defaults_applied;
  EXPECT_NE(std::find(d.begin(), d.end(), "detection.det_threshold"), d.end());
  EXPECT_EQ(std::find(d.begin(), d.end(), "segmentation.stride"), d.end());
  EXPECT_EQ(d.size(), config_keys().size() - 1);
}

TEST(Config, Fnv1a) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

class CliCase : public ::testing::Test {
 protected:
  testing::TempDir dir_{"cli"};
};

TEST_F(CliCase, ScoreOnSmallRoiIsL1) {
  const fs::path bundle = dir_ / "roi";
  ASSERT_EQ(run_cli({"synth", "roi_small", "--seed", "4", "--out", bundle.string()}), 0);
  const fs::path out = dir_ / "run";
  ASSERT_EQ(run_cli({"run", "score", "--slide", (bundle / "slide.png").string(), "--tissue-mask",
                     (bundle / "tissue.png").string(), "--config", (bundle / "config.cfg").string(), "--out",
                     out.string()}),
            0);
  EXPECT_TRUE(fs::exists(out / "segmentation.png"));
  EXPECT_TRUE(fs::exists(out / "detections.csv"));
  EXPECT_FALSE(fs::exists(out / "tils_report.json"));
  const json manifest = read_json(out / "run_manifest.json");
  EXPECT_EQ(manifest["status"], "ok");
  EXPECT_EQ(manifest["branch"], "L1");
  const auto& defaults = manifest["defaults_applied"];
  EXPECT_NE(std::find(defaults.begin(), defaults.end(), "detection.det_threshold"), defaults.end());
  const json expected = read_json(bundle / "expected.json");
  EXPECT_EQ(read_detections_csv(out / "detections.csv").size(), expected["til_count"].get<std::size_t>());
}

TEST_F(CliCase, SegmentSavesProbabilities) {
  const fs::path bundle = dir_ / "roi";
  ASSERT_EQ(run_cli({"synth", "roi_small", "--seed", "2", "--out", bundle.string()}), 0);
  const fs::path out = dir_ / "seg";
  ASSERT_EQ(run_cli({"run", "segment", "--slide", (bundle / "slide.png").string(), "--tissue-mask",
                     (bundle / "tissue.png").string(), "--config", (bundle / "config.cfg").string(), "--out",
                     out.string(), "--save-probabilities"}),
            0);
  const auto labels = load_raster(out / "segmentation.png");
  const auto tumor = load_raster(out / "tumor_probability.png");
  EXPECT_FALSE(tumor.default_resolution);
  EXPECT_EQ(tumor.raster.width() * 2, labels.raster.width());
  EXPECT_DOUBLE_EQ(tumor.raster.resolution().mpp_x, 1.0);
  EXPECT_TRUE(fs::exists(out / "stroma_probability.png"));
  const fs::path plain = dir_ / "seg_plain";
  ASSERT_EQ(run_cli({"run", "segment", "--slide", (bundle / "slide.png").string(), "--tissue-mask",
                     (bundle / "tissue.png").string(), "--config", (bundle / "config.cfg").string(), "--out",
                     plain.string()}),
            0);
  EXPECT_FALSE(fs::exists(plain / "tumor_probability.png"));
  EXPECT_EQ(read_text(plain / "segmentation.png"), read_text(out / "segmentation.png"));
}

TEST_F(CliCase, ExitCodes) {
  EXPECT_EQ(run_cli({"frobnicate"}), kExitValidation);
  EXPECT_EQ(run_cli({"run", "score", "--slide", (dir_ / "nope.png").string(), "--tissue-mask",
                     (dir_ / "nope_mask.png").string(), "--out", (dir_ / "o").string()}),
            kExitValidation);
  const json manifest = read_json(dir_ / "o" / "run_manifest.json");
  EXPECT_EQ(manifest["status"], "error");
  EXPECT_EQ(manifest["exit_code"], 2);
  std::ofstream(dir_ / "bad.cfg") << "no.such.key = 1\n";
  EXPECT_EQ(run_cli({"eval", "survival", "--pred", (dir_ / "x.csv").string(), "--config",
                     (dir_ / "bad.cfg").string(), "--out", (dir_ / "e").string()}),
            kExitValidation);
  EXPECT_EQ(run_cli({"synth", "nonexistent", "--out", (dir_ / "s").string()}), kExitValidation);
}

TEST_F(CliCase, CorruptSlideIsValidationError) {
  std::ofstream(dir_ / "slide.png", std::ios::binary) << "not a png";
  save_raster(ImageU8(4, 4, 1), dir_ / "mask.png");
  EXPECT_EQ(run_cli({"run", "segment", "--slide", (dir_ / "slide.png").string(), "--tissue-mask",
                     (dir_ / "mask.png").string(), "--out", (dir_ / "o").string()}),
            kExitValidation);
}

TEST_F(CliCase, EvalSegIdentical) {
  const fs::path bundle = dir_ / "roi";
  ASSERT_EQ(run_cli({"synth", "roi_small", "--seed", "1", "--out", bundle.string()}), 0);
  fs::create_directories(dir_ / "pred");
  fs::create_directories(dir_ / "gt");
  fs::copy_file(bundle / "gt_labels.png", dir_ / "pred" / "case1.png");
  fs::copy_file(bundle / "gt_labels.png", dir_ / "gt" / "case1.png");
  ASSERT_EQ(run_cli({"eval", "seg", "--pred", (dir_ / "pred").string(), "--gt", (dir_ / "gt").string(), "--out",
                     (dir_ / "e").string()}),
            0);
  EXPECT_EQ(read_json(dir_ / "e" / "metrics.json")["mean_tumor_stroma_dice"], 1.0);
}

TEST_F(CliCase, EvalDetEmptyPredictions) {
  fs::create_directories(dir_ / "pred");
  fs::create_directories(dir_ / "gt");
  write_detections_csv(dir_ / "pred" / "a.csv", {});
  const std::vector<PointXY> gt{{10, 10}, {40, 40}};
  write_points_csv(dir_ / "gt" / "a.csv", gt);
  ASSERT_EQ(run_cli({"eval", "det", "--pred", (dir_ / "pred").string(), "--gt", (dir_ / "gt").string(), "--out",
                     (dir_ / "e").string()}),
            0);
  const json m = read_json(dir_ / "e" / "metrics.json");
  EXPECT_EQ(m["f1"], 0.0);
  EXPECT_EQ(m["froc"], 0.0);
}

TEST_F(CliCase, EvalDetUnpaired) {
  fs::create_directories(dir_ / "pred");
  fs::create_directories(dir_ / "gt");
  write_detections_csv(dir_ / "pred" / "a.csv", {});
  write_detections_csv(dir_ / "pred" / "b.csv", {});
  write_points_csv(dir_ / "gt" / "a.csv", {});
  EXPECT_EQ(run_cli({"eval", "det", "--pred", (dir_ / "pred").string(), "--gt", (dir_ / "gt").string(), "--out",
                     (dir_ / "e").string()}),
            kExitValidation);
  const json m = read_json(dir_ / "e" / "run_manifest.json");
  EXPECT_NE(m["error"].get<std::string>().find("b.csv"), std::string::npos);
}

TEST_F(CliCase, EvalTilsPairsByCase) {
  std::ofstream(dir_ / "pred.csv") << "case_id,score\nA,10\nB,20\nC,35\n";
  std::ofstream(dir_ / "gt.csv") << "case_id,score\nC,30\nA,12\nB,18\n";
  ASSERT_EQ(run_cli({"eval", "tils", "--pred", (dir_ / "pred.csv").string(), "--gt", (dir_ / "gt.csv").string(),
                     "--out", (dir_ / "e").string()}),
            0);
  EXPECT_GT(read_json(dir_ / "e" / "metrics.json")["pearson_r"].get<double>(), 0.9);
  std::ofstream(dir_ / "gt2.csv") << "case_id,score\nA,12\nB,18\n";
  EXPECT_EQ(run_cli({"eval", "tils", "--pred", (dir_ / "pred.csv").string(), "--gt", (dir_ / "gt2.csv").string(),
                     "--out", (dir_ / "e2").string()}),
            kExitValidation);
}

TEST_F(CliCase, EvalSurvivalMatchesFixture) {
  const fs::path bundle = dir_ / "cohort";
  ASSERT_EQ(run_cli({"synth", "survival_cohort", "--seed", "9", "--out", bundle.string()}), 0);
  ASSERT_EQ(run_cli({"eval", "survival", "--pred", (bundle / "cohort.csv").string(), "--out", (dir_ / "e").string()}),
            0);
  const json m = read_json(dir_ / "e" / "metrics.json");
  EXPECT_EQ(m["c_index"].get<double>(), read_json(bundle / "expected.json")["c_index"].get<double>());
  EXPECT_TRUE(m["cox_beta"].is_number());
}

TEST_F(CliCase, SynthDeterministic) {
  for (const auto& scenario : synth_scenarios()) {
    if (scenario == "slide_l2") continue;  // covered by the acceptance run
    const fs::path a = dir_ / (scenario + "_a");
    const fs::path b = dir_ / (scenario + "_b");
    ASSERT_EQ(run_cli({"synth", scenario, "--seed", "5", "--out", a.string()}), 0);
    ASSERT_EQ(run_cli({"synth", scenario, "--seed", "5", "--out", b.string()}), 0);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      ++files;
      EXPECT_EQ(read_text(entry.path()), read_text(b / entry.path().filename())) << scenario << " "
                                                                               << entry.path().filename();
    }
    EXPECT_GT(files, 1u);
  }
}

TEST(Synth, BlobFieldProperties) {
  const auto field = make_blob_field(3, 256, 256);
  EXPECT_GE(field.blobs.size(), 5u);
  EXPECT_LE(field.blobs.size(), 15u);
  for (std::size_t i = 0; i < field.blobs.size(); ++i) {
    for (std::size_t j = i + 1; j < field.blobs.size(); ++j) {
      const auto& a = field.blobs[i];
      const auto& b = field.blobs[j];
      const double d = std::hypot(a.x - b.x, a.y - b.y);
      EXPECT_GE(d, a.radius + b.radius + 4);
    }
  }
}

TEST(Synth, CohortOracleMatchesFastConcordance) {
  const auto records = make_survival_cohort(2, 200, 0.7);
  EXPECT_EQ(concordance_index(records), brute_force_concordance(records));
}

}  // namespace
}  // namespace tilscore::cli
