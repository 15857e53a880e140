// Copyright 2026 The DirDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dirdp/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"

namespace dirdp {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dirdp_experiment_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.name = "toy";
  c.dataset.kind = DatasetSpec::Kind::kSynthetic;
  c.dataset.n_train = 40;
  c.dataset.n_test = 20;
  c.dataset.synth.classes = 4;
  c.dataset.synth.image_size = 6;
  c.dataset.synth.seed = 3;
  c.model.arch = Architecture::kMlp;
  c.model.hidden = 8;
  c.model.num_classes = 10;
  c.training.mechanism = Mechanism::kVmf;
  c.training.epsilon_v = 50.0;
  c.training.expected_batch = 8;
  c.training.learning_rate = 0.5;
  c.training.epochs = 2;
  AttackSpec a;
  a.config.iterations = 20;
  a.config.hvp_mode = HvpMode::kAnalyticMlp;
  a.images = 2;
  a.against = AttackTarget::kBoth;
  c.attacks.push_back(a);
  AttackSpec b = a;
  b.config.method = AttackMethod::kIga;
  b.against = AttackTarget::kDummy;
  c.attacks.push_back(b);
  c.seeds = {1, 2};
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(slurp(p));
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

TEST(ExperimentConfigTest, JsonRoundTrip) {
  const ExperimentConfig c = small_config();
  const json j = to_json(c);
  EXPECT_EQ(to_json(experiment_config_from_json(j)).dump(), j.dump());
  EXPECT_EQ(config_hash(experiment_config_from_json(j)), config_hash(c));
  ExperimentConfig d = c;
  d.training.epsilon_v = 51.0;
  EXPECT_NE(config_hash(d), config_hash(c));
}

TEST(ExperimentConfigTest, RejectsBadConfigs) {
  json j = to_json(small_config());
  j["trainnig"] = json::object();
  EXPECT_THROW(experiment_config_from_json(j), ConfigError);

  j = to_json(small_config());
  j.erase("seeds");
  EXPECT_THROW(experiment_config_from_json(j), ConfigError);

  j = to_json(small_config());
  j["training"]["mechanism"] = "laplace";
  EXPECT_THROW(experiment_config_from_json(j), ConfigError);

  j = to_json(small_config());
  j["training"]["epochs"] = "three";
  EXPECT_THROW(experiment_config_from_json(j), ConfigError);

  ExperimentConfig c = small_config();
  c.attacks[0].images = 51;
  EXPECT_THROW(validate(c), ConfigError);
  c = small_config();
  c.training.sigma = 1.0;  // vmf with a sigma
  EXPECT_THROW(validate(c), ConfigError);
  c = small_config();
  c.seeds.clear();
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(ExperimentConfigTest, FileErrors) {
  const fs::path dir = scratch("file_errors");
  EXPECT_THROW(load_experiment_config((dir / "missing.json").string()), ConfigError);
  std::ofstream(dir / "broken.json") << "{ \"seeds\": [1,";
  EXPECT_THROW(load_experiment_config((dir / "broken.json").string()), ConfigError);
}

TEST(DatasetTest, MissingMnistDirectoryIsDataError) {
  ExperimentConfig c = small_config();
  c.dataset.kind = DatasetSpec::Kind::kMnistSubset;
  c.dataset.path = "/nonexistent/mnist";
  EXPECT_THROW(run_experiment(c), DataError);
}

TEST(DatasetTest, MnistSubsetSizes) {
  DatasetSpec s;
  s.path = DIRDP_DATA_DIR "/mnist5k";
  s.n_train = 30;
  s.n_test = 7;
  s.image_size = 8;
  const Datasets d = load_datasets(s);
  EXPECT_EQ(d.train.size(), 30u);
  EXPECT_EQ(d.test.size(), 7u);
  EXPECT_EQ(d.train[0].x.shape, (ImageShape{8, 8, 1}));
  s.n_train = 100000;
  EXPECT_THROW(load_datasets(s), DataError);
}

TEST(RunExperimentTest, RecordShapeAndPersistence) {
  ExperimentConfig c = small_config();
  const fs::path dir = scratch("run");
  c.output_dir = dir.string();
  const ResultsRecord r = run_experiment(c);
  ASSERT_EQ(r.replicates.size(), 2u);
  for (const ReplicateResult& rep : r.replicates) {
    EXPECT_EQ(rep.epochs.size(), 2u);
    EXPECT_EQ(rep.top_k.size(), 2u);
    EXPECT_LE(rep.top_k.at(1), rep.top_k.at(5));
    ASSERT_EQ(rep.attacks.size(), 3u);  // dlg dummy, dlg trained, iga dummy
    EXPECT_EQ(rep.attacks[0].against, "dummy");
    EXPECT_EQ(rep.attacks[1].against, "trained");
    EXPECT_EQ(rep.attacks[2].method, AttackMethod::kIga);
    for (const AttackResult& a : rep.attacks) EXPECT_EQ(a.images.size(), 2u);
  }
  EXPECT_EQ(r.timings.train_seconds.size(), 2u);
  for (const char* f : {"config.json", "record.json", "timings.json", "results.jsonl",
                        "trace_seed1.jsonl", "trace_seed2.jsonl"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  // The record embeds a config that reproduces the run.
  const ResultsRecord back = load_results_record((dir / "record.json").string());
  EXPECT_EQ(to_json(back).dump(), to_json(r).dump());
  EXPECT_EQ(slurp(dir / "record.json"), to_json(r).dump() + "\n");
  EXPECT_EQ(back.config_hash, config_hash(back.config));
}

TEST(RunExperimentTest, RerunIsByteIdentical) {
  ExperimentConfig c = small_config();
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  c.output_dir = a.string();
  run_experiment(c);
  c.output_dir = b.string();
  c.training.threads = 3;
  run_experiment(c);
  EXPECT_EQ(slurp(a / "record.json"), slurp(b / "record.json"));
  EXPECT_EQ(slurp(a / "trace_seed1.jsonl"), slurp(b / "trace_seed1.jsonl"));
  EXPECT_TRUE(verify_run(a.string()).identical);
}

TEST(RunExperimentTest, VerifyDetectsTampering) {
  ExperimentConfig c = small_config();
  c.attacks.clear();
  const fs::path dir = scratch("tamper");
  c.output_dir = dir.string();
  run_experiment(c);
  std::string rec = slurp(dir / "record.json");
  const auto pos = rec.find("\"test_accuracy\":");
  ASSERT_NE(pos, std::string::npos);
  rec.insert(pos + 16, "0.5e-9+");  // still distinct bytes
  std::ofstream(dir / "record.json", std::ios::binary) << rec;
  EXPECT_FALSE(verify_run(dir.string()).identical);
}

TEST(ReportTest, CsvRowsRoundTripAndStripCount) {
  ExperimentConfig c = small_config();
  const ResultsRecord r1 = run_experiment(c);
  c.name = "toy_gauss";
  c.training.mechanism = Mechanism::kGaussian;
  c.training.epsilon_v = 0.0;
  c.training.sigma = 0.5;
  c.attacks.pop_back();
  const ResultsRecord r2 = run_experiment(c);
  const fs::path dir = scratch("report");
  const ReportFiles files = emit_report({r1, r2}, dir.string());

  const auto acc = read_csv(files.accuracy_csv);
  ASSERT_EQ(acc.size(), 3u);  // header + one row per cell
  EXPECT_EQ(acc[0][6], "mean_test_accuracy");
  EXPECT_EQ(std::strtod(acc[1][6].c_str(), nullptr), r1.mean_test_accuracy());
  EXPECT_EQ(std::strtod(acc[2][6].c_str(), nullptr), r2.mean_test_accuracy());
  EXPECT_EQ(acc[2][2], "gaussian");

  const auto att = read_csv(files.attacks_csv);
  // r1: dlg dummy, dlg trained, iga dummy; r2: dlg dummy, dlg trained.
  ASSERT_EQ(att.size(), 1u + 3u + 2u);
  const auto pooled = pooled_attacks(r1);
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    EXPECT_EQ(std::strtod(att[1 + i][8].c_str(), nullptr), pooled[i].summary.mean_ssim);
    EXPECT_EQ(std::strtod(att[1 + i][9].c_str(), nullptr), pooled[i].summary.median_mse);
  }
  // images x settings.
  EXPECT_EQ(files.strips.size(), 2u * (3u + 2u));
  for (const std::string& s : files.strips) EXPECT_TRUE(fs::exists(s));
  EXPECT_THROW(emit_report({}, dir.string()), ConfigError);
}

TEST(ReportTest, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 2.0 / 3.0, 1e-300, 123456789.123456789, -0.0}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
}

}  // namespace
}  // namespace dirdp
