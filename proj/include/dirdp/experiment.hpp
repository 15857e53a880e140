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

// Experiment orchestration: configuration, dataset loading, the
// train -> attack -> score pipeline, persisted results and CSV/PGM reports.
//
// Output directory layout written by run_experiment:
//   config.json        the exact configuration (canonical JSON)
//   record.json        ResultsRecord without timings; byte-identical on rerun
//   timings.json       wall-clock seconds per phase
//   results.jsonl      one record per line, appended on every run
//   trace_seed<S>.jsonl training trace of replicate S

#ifndef DIRDP_EXPERIMENT_HPP_
#define DIRDP_EXPERIMENT_HPP_

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dirdp/attacks.hpp"
#include "dirdp/data.hpp"
#include "dirdp/error.hpp"
#include "dirdp/image_io.hpp"
#include "dirdp/metrics.hpp"
#include "dirdp/nn.hpp"
#include "dirdp/parallel.hpp"
#include "dirdp/training.hpp"

namespace dirdp {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kMaxAttackImages = 50;

struct DatasetSpec {
  enum class Kind { kMnistSubset, kSynthetic } kind = Kind::kMnistSubset;
  std::string path = "data/mnist5k";   // mnist_subset
  std::size_t n_train = 2000;
  std::size_t n_test = 500;
  int image_size = 0;                  // 0 keeps the native size
  SynthSpec synth;                     // synthetic; synth.n is unused
};

enum class AttackTarget { kDummy, kTrained, kBoth };

struct AttackSpec {
  AttackConfig config;
  int images = 10;
  AttackTarget against = AttackTarget::kDummy;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSpec dataset;
  ModelSpec model;          // model.input is filled from the dataset
  TrainingConfig training;  // training.seed is replaced per replicate
  std::vector<AttackSpec> attacks;
  std::string output_dir;
  std::vector<std::uint64_t> seeds;
  std::vector<int> top_k = {1, 5};
};

// ---------------------------------------------------------------------------
// JSON <-> config. Unknown keys are rejected so that typos surface as
// configuration errors instead of silently falling back to defaults.

namespace detail {

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  template <typename T>
  T require(const char* key) {
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing required key '" + key + "'");
    T out{};
    get(key, out);
    return out;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline std::string attack_target_name(AttackTarget t) {
  switch (t) {
    case AttackTarget::kDummy: return "dummy";
    case AttackTarget::kTrained: return "trained";
    case AttackTarget::kBoth: return "both";
  }
  return "?";
}

inline AttackTarget parse_attack_target(const std::string& s) {
  if (s == "dummy") return AttackTarget::kDummy;
  if (s == "trained") return AttackTarget::kTrained;
  if (s == "both") return AttackTarget::kBoth;
  throw ConfigError("unknown attack target '" + s + "'");
}

}  // namespace detail

// With include_runtime = false the output directory and thread count are
// left out: they change where and how fast a run happens, not its results.
inline json to_json(const ExperimentConfig& c, bool include_runtime = true) {
  json ds;
  if (c.dataset.kind == DatasetSpec::Kind::kMnistSubset) {
    ds = {{"kind", "mnist_subset"},
          {"path", c.dataset.path},
          {"n_train", c.dataset.n_train},
          {"n_test", c.dataset.n_test},
          {"image_size", c.dataset.image_size}};
  } else {
    const SynthSpec& s = c.dataset.synth;
    ds = {{"kind", "synthetic"},        {"n_train", c.dataset.n_train},
          {"n_test", c.dataset.n_test}, {"classes", s.classes},
          {"image_size", s.image_size}, {"channels", s.channels},
          {"contrast", s.contrast},     {"noise", s.noise},
          {"seed", s.seed}};
  }
  const ModelSpec& m = c.model;
  json model = {{"arch", to_string(m.arch)},
                {"hidden", m.hidden},
                {"conv1_channels", m.conv1_channels},
                {"conv2_channels", m.conv2_channels}};
  const TrainingConfig& t = c.training;
  json tr = {{"mechanism", to_string(t.mechanism)},
             {"epsilon_v", t.epsilon_v},
             {"sigma", t.sigma},
             {"halve_epsilon", t.halve_epsilon},
             {"C", t.clip_bound},
             {"L", t.expected_batch},
             {"eta", t.learning_rate},
             {"epochs", t.epochs},
             {"steps", t.steps},
             {"sampling", to_string(t.sampling)},
             {"vmf_scope", to_string(t.vmf_scope)}};
  json attacks = json::array();
  for (const AttackSpec& a : c.attacks) {
    const AttackConfig& ac = a.config;
    attacks.push_back({{"method", to_string(ac.method)},
                       {"iterations", ac.iterations},
                       {"eta", ac.step_size()},
                       {"alpha_tv", ac.alpha_tv},
                       {"hvp_mode", to_string(ac.hvp_mode)},
                       {"init", to_string(ac.init)},
                       {"seed", ac.seed},
                       {"fd_step", ac.fd_step},
                       {"images", a.images},
                       {"against", detail::attack_target_name(a.against)}});
  }
  json out = {{"name", c.name},     {"dataset", ds},    {"model", model},
              {"training", tr},     {"attacks", attacks}, {"seeds", c.seeds},
              {"top_k", c.top_k}};
  if (include_runtime) {
    out["output_dir"] = c.output_dir;
    out["threads"] = c.training.threads;
  }
  return out;
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  detail::ObjectReader root(j, "config");
  root.get("name", c.name);
  root.get("output_dir", c.output_dir);
  root.get("top_k", c.top_k);
  root.get("threads", c.training.threads);
  c.seeds = root.require<std::vector<std::uint64_t>>("seeds");

  if (const json* d = root.child("dataset")) {
    detail::ObjectReader r(*d, "dataset");
    const std::string kind = r.require<std::string>("kind");
    r.get("n_train", c.dataset.n_train);
    r.get("n_test", c.dataset.n_test);
    if (kind == "mnist_subset") {
      c.dataset.kind = DatasetSpec::Kind::kMnistSubset;
      r.get("path", c.dataset.path);
      r.get("image_size", c.dataset.image_size);
    } else if (kind == "synthetic") {
      c.dataset.kind = DatasetSpec::Kind::kSynthetic;
      SynthSpec& s = c.dataset.synth;
      r.get("classes", s.classes);
      r.get("image_size", s.image_size);
      r.get("channels", s.channels);
      r.get("contrast", s.contrast);
      r.get("noise", s.noise);
      r.get("seed", s.seed);
      c.dataset.image_size = s.image_size;
    } else {
      throw ConfigError("dataset.kind must be mnist_subset or synthetic, got '" + kind + "'");
    }
    r.finish();
  }
  if (const json* m = root.child("model")) {
    detail::ObjectReader r(*m, "model");
    std::string arch = to_string(c.model.arch);
    r.get("arch", arch);
    c.model.arch = parse_architecture(arch);
    r.get("hidden", c.model.hidden);
    r.get("conv1_channels", c.model.conv1_channels);
    r.get("conv2_channels", c.model.conv2_channels);
    r.finish();
  }
  if (const json* t = root.child("training")) {
    detail::ObjectReader r(*t, "training");
    TrainingConfig& tc = c.training;
    std::string mech = "none", sampling = "poisson", scope = "concatenated";
    r.get("mechanism", mech);
    tc.mechanism = parse_mechanism(mech);
    r.get("epsilon_v", tc.epsilon_v);
    r.get("sigma", tc.sigma);
    r.get("halve_epsilon", tc.halve_epsilon);
    r.get("C", tc.clip_bound);
    r.get("L", tc.expected_batch);
    r.get("eta", tc.learning_rate);
    r.get("epochs", tc.epochs);
    r.get("steps", tc.steps);
    r.get("sampling", sampling);
    tc.sampling = parse_sampling(sampling);
    r.get("vmf_scope", scope);
    tc.vmf_scope = parse_vmf_scope(scope);
    r.finish();
  }
  if (const json* a = root.child("attacks")) {
    if (!a->is_array()) throw ConfigError("attacks: expected an array");
    for (std::size_t i = 0; i < a->size(); ++i) {
      detail::ObjectReader r((*a)[i], "attacks[" + std::to_string(i) + "]");
      AttackSpec s;
      AttackConfig& ac = s.config;
      ac.method = parse_attack_method(r.require<std::string>("method"));
      std::string hvp = to_string(ac.hvp_mode), init = to_string(ac.init);
      std::string against = "dummy";
      r.get("iterations", ac.iterations);
      r.get("eta", ac.eta);
      r.get("alpha_tv", ac.alpha_tv);
      r.get("hvp_mode", hvp);
      ac.hvp_mode = parse_hvp_mode(hvp);
      r.get("init", init);
      ac.init = parse_attack_init(init);
      r.get("seed", ac.seed);
      r.get("fd_step", ac.fd_step);
      r.get("images", s.images);
      r.get("against", against);
      s.against = detail::parse_attack_target(against);
      r.finish();
      c.attacks.push_back(s);
    }
  }
  root.finish();
  return c;
}

inline void validate(const ExperimentConfig& c) {
  if (c.seeds.empty()) throw ConfigError("at least one replicate seed is required");
  if (c.dataset.n_train < 1) throw ConfigError("dataset.n_train must be >= 1");
  if (c.dataset.image_size < 0) throw ConfigError("dataset.image_size must be >= 0");
  if (c.dataset.kind == DatasetSpec::Kind::kSynthetic) c.dataset.synth.validate();
  c.training.validate();
  for (const AttackSpec& a : c.attacks) {
    a.config.validate();
    if (a.images < 1 || a.images > kMaxAttackImages) {
      throw ConfigError("attack images must be in 1.." + std::to_string(kMaxAttackImages));
    }
    if (static_cast<std::size_t>(a.images) > c.dataset.n_train) {
      throw ConfigError("attack images exceed the training set size");
    }
  }
  for (int k : c.top_k) {
    if (k < 1 || k > c.model.num_classes) throw ConfigError("top_k entries must be in 1..classes");
  }
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  ExperimentConfig c = experiment_config_from_json(j);
  validate(c);
  return c;
}

// 64-bit FNV-1a of the canonical config text (runtime fields excluded), as
// 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(c, false).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Datasets.

struct Datasets {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
};

namespace detail {

inline std::string idx_file(const std::string& dir, const std::string& stem) {
  for (const std::string& name : {stem + ".gz", stem}) {
    const fs::path p = fs::path(dir) / name;
    if (fs::exists(p)) return p.string();
  }
  throw DataError("missing " + (fs::path(dir) / stem).string() + "[.gz]");
}

}  // namespace detail

inline Datasets load_datasets(const DatasetSpec& spec) {
  Datasets d;
  if (spec.kind == DatasetSpec::Kind::kMnistSubset) {
    std::optional<int> resize;
    if (spec.image_size > 0) resize = spec.image_size;
    d.train = load_mnist_idx(detail::idx_file(spec.path, "train-images-idx3-ubyte"),
                             detail::idx_file(spec.path, "train-labels-idx1-ubyte"),
                             spec.n_train, resize);
    if (spec.n_test > 0) {
      d.test = load_mnist_idx(detail::idx_file(spec.path, "t10k-images-idx3-ubyte"),
                              detail::idx_file(spec.path, "t10k-labels-idx1-ubyte"),
                              spec.n_test, resize);
    }
    if (d.train.size() < spec.n_train || d.test.size() < spec.n_test) {
      throw DataError("dataset at " + spec.path + " has fewer examples than requested");
    }
  } else {
    SynthSpec s = spec.synth;
    s.n = spec.n_train + spec.n_test;
    auto all = synth_dataset(s);
    d.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(spec.n_train));
    d.test.assign(all.begin() + static_cast<std::ptrdiff_t>(spec.n_train), all.end());
  }
  return d;
}

// ---------------------------------------------------------------------------
// Results.

struct AttackImageResult {
  std::size_t index = 0;
  int label = 0;
  ImageScore score;
  double best_loss = 0.0;
  int best_iteration = 0;
  bool diverged = false;
  ImageTensor reconstructed;
  ImageTensor ground_truth;
};

struct AttackResult {
  AttackMethod method = AttackMethod::kDlg;
  std::string against;   // "dummy" or "trained"
  MetricSummary summary;
  std::vector<AttackImageResult> images;
};

struct ReplicateResult {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  std::map<int, double> top_k;
  std::vector<AttackResult> attacks;
  TrainingTrace trace;
};

struct Timings {
  std::vector<double> train_seconds;
  std::vector<double> attack_seconds;
  double total_seconds = 0.0;
};

struct ResultsRecord {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<ReplicateResult> replicates;
  Timings timings;

  double mean_test_accuracy() const {
    double s = 0.0;
    for (const ReplicateResult& r : replicates) {
      s += r.epochs.empty() ? 0.0 : r.epochs.back().test_accuracy;
    }
    return replicates.empty() ? 0.0 : s / static_cast<double>(replicates.size());
  }
};

// Scores pooled over replicates for one (method, target) pair.
struct PooledAttack {
  AttackMethod method;
  std::string against;
  MetricSummary summary;
};

inline std::vector<PooledAttack> pooled_attacks(const ResultsRecord& r) {
  std::vector<PooledAttack> out;
  if (r.replicates.empty()) return out;
  for (std::size_t a = 0; a < r.replicates.front().attacks.size(); ++a) {
    std::vector<ImageScore> scores;
    for (const ReplicateResult& rep : r.replicates) {
      for (const ImageScore& s : rep.attacks[a].summary.per_image) scores.push_back(s);
    }
    const AttackResult& first = r.replicates.front().attacks[a];
    out.push_back({first.method, first.against, summarize(scores)});
  }
  return out;
}

inline json to_json(const ResultsRecord& r) {
  json reps = json::array();
  for (const ReplicateResult& rep : r.replicates) {
    json epochs = json::array();
    for (const EpochRecord& e : rep.epochs) {
      epochs.push_back({{"epoch", e.epoch},
                        {"step", e.step},
                        {"test_accuracy", e.test_accuracy},
                        {"test_loss", e.test_loss}});
    }
    json topk = json::object();
    for (const auto& [k, v] : rep.top_k) topk[std::to_string(k)] = v;
    json attacks = json::array();
    for (const AttackResult& a : rep.attacks) {
      json imgs = json::array();
      for (const AttackImageResult& im : a.images) {
        imgs.push_back({{"index", im.index},
                        {"label", im.label},
                        {"ssim", im.score.ssim},
                        {"mse", im.score.mse},
                        {"best_loss", im.best_loss},
                        {"best_iteration", im.best_iteration},
                        {"diverged", im.diverged},
                        {"shape", {im.ground_truth.height(), im.ground_truth.width(),
                                   im.ground_truth.channels()}},
                        {"reconstructed", im.reconstructed.data},
                        {"ground_truth", im.ground_truth.data}});
      }
      attacks.push_back({{"method", to_string(a.method)},
                         {"against", a.against},
                         {"mean_ssim", a.summary.mean_ssim},
                         {"median_mse", a.summary.median_mse},
                         {"images", imgs}});
    }
    reps.push_back({{"seed", rep.seed}, {"epochs", epochs}, {"top_k", topk}, {"attacks", attacks}});
  }
  json pooled = json::array();
  for (const PooledAttack& p : pooled_attacks(r)) {
    pooled.push_back({{"method", to_string(p.method)},
                      {"against", p.against},
                      {"mean_ssim", p.summary.mean_ssim},
                      {"median_mse", p.summary.median_mse}});
  }
  return {{"config", to_json(r.config, false)},
          {"config_hash", r.config_hash},
          {"replicates", reps},
          {"summary", {{"mean_test_accuracy", r.mean_test_accuracy()}, {"attacks", pooled}}}};
}

// Rebuilds a record from record.json (trace and timings are not stored there).
inline ResultsRecord results_record_from_json(const json& j) {
  ResultsRecord r;
  try {
    r.config = experiment_config_from_json(j.at("config"));
    r.config_hash = j.at("config_hash").get<std::string>();
    for (const json& rj : j.at("replicates")) {
      ReplicateResult rep;
      rep.seed = rj.at("seed").get<std::uint64_t>();
      for (const json& e : rj.at("epochs")) {
        rep.epochs.push_back({e.at("epoch").get<int>(), e.at("step").get<std::int64_t>(),
                              e.at("test_accuracy").get<double>(),
                              e.at("test_loss").get<double>()});
      }
      for (auto it = rj.at("top_k").begin(); it != rj.at("top_k").end(); ++it) {
        rep.top_k[std::stoi(it.key())] = it.value().get<double>();
      }
      for (const json& aj : rj.at("attacks")) {
        AttackResult a;
        a.method = parse_attack_method(aj.at("method").get<std::string>());
        a.against = aj.at("against").get<std::string>();
        std::vector<ImageScore> scores;
        for (const json& im : aj.at("images")) {
          AttackImageResult ir;
          ir.index = im.at("index").get<std::size_t>();
          ir.label = im.at("label").get<int>();
          ir.score = {im.at("ssim").get<double>(), im.at("mse").get<double>()};
          ir.best_loss = im.at("best_loss").get<double>();
          ir.best_iteration = im.at("best_iteration").get<int>();
          ir.diverged = im.at("diverged").get<bool>();
          const auto shape = im.at("shape").get<std::vector<int>>();
          if (shape.size() != 3) throw DataError("record: bad image shape");
          const ImageShape s{shape[0], shape[1], shape[2]};
          ir.reconstructed = ImageTensor(s, im.at("reconstructed").get<FlatVector>());
          ir.ground_truth = ImageTensor(s, im.at("ground_truth").get<FlatVector>());
          scores.push_back(ir.score);
          a.images.push_back(std::move(ir));
        }
        a.summary = summarize(scores);
        rep.attacks.push_back(std::move(a));
      }
      r.replicates.push_back(std::move(rep));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed results record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed results record: ") + e.what());
  }
  return r;
}

inline ResultsRecord load_results_record(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  try {
    return results_record_from_json(json::parse(f));
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Pipeline.

namespace detail {

inline constexpr std::uint64_t kAttackNoiseStream = 0x7a49e7;

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Written to a temporary name and renamed, so readers never see a partial
// file.
inline void write_file_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw DataError("cannot write " + tmp.string());
    f << text;
    if (!f) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace detail

// The gradient an attacker observes for one example: the single-example
// (L = 1) output of the configured mechanism.
inline FlatVector observed_gradient(const NetworkParams& params, const LabeledExample& ex,
                                    const TrainingConfig& training, std::uint64_t seed,
                                    std::size_t index) {
  TrainingConfig single = training;
  single.expected_batch = 1;
  RngStream rng = RngStream::derive(seed, {detail::kAttackNoiseStream, index});
  return detail::privatize(loss_and_grad(params, ex).grad, single, params.tensor_ranges(), rng);
}

// Attacks the first spec.images training examples against `params`.
inline AttackResult run_attack_setting(const NetworkParams& params,
                                       std::span<const LabeledExample> train_set,
                                       const TrainingConfig& training, const AttackSpec& spec,
                                       std::uint64_t seed, const std::string& against,
                                       unsigned threads) {
  AttackResult out;
  out.method = spec.config.method;
  out.against = against;
  const auto n = static_cast<std::size_t>(spec.images);
  out.images.resize(n);
  // Images run in parallel; each attack is single-threaded.
  parallel_for(n, threads, [&](std::size_t i) {
    const LabeledExample& ex = train_set[i];
    const FlatVector target = observed_gradient(params, ex, training, seed, i);
    AttackConfig cfg = spec.config;
    cfg.threads = 1;
    cfg.seed = RngStream::derive(spec.config.seed, {seed, i}).next_u64();
    const AttackReport rep = cfg.method == AttackMethod::kDlg
                                 ? dlg_attack(params, target, cfg, &ex.x)
                                 : iga_attack(params, target, ex.y, cfg, &ex.x);
    AttackImageResult& r = out.images[i];
    r.index = i;
    r.label = ex.y;
    r.score = {*rep.final_ssim, *rep.final_mse};
    r.best_loss = rep.best_loss;
    r.best_iteration = rep.best_iteration;
    r.diverged = rep.diverged;
    r.reconstructed = rep.reconstructed;
    r.ground_truth = ex.x;
  });
  std::vector<ImageScore> scores;
  for (const AttackImageResult& r : out.images) scores.push_back(r.score);
  out.summary = summarize(scores);
  return out;
}

inline ReplicateResult run_replicate(const ExperimentConfig& cfg, const ModelSpec& spec,
                                     const Datasets& data, std::uint64_t seed,
                                     Timings* timings) {
  ReplicateResult rep;
  rep.seed = seed;
  TrainingConfig tc = cfg.training;
  tc.seed = seed;
  const NetworkParams init = NetworkParams::random(spec, seed);

  auto t0 = std::chrono::steady_clock::now();
  TrainingResult trained = train(init, data.train, data.test, tc);
  if (timings) timings->train_seconds.push_back(detail::seconds_since(t0));
  rep.epochs = trained.trace.epochs;
  rep.trace = std::move(trained.trace);
  if (!data.test.empty()) {
    const EvalResult ev = evaluate(trained.params, data.test);
    for (int k : cfg.top_k) rep.top_k[k] = top_k_accuracy(ev.logits, ev.labels, k);
  }

  t0 = std::chrono::steady_clock::now();
  for (const AttackSpec& a : cfg.attacks) {
    if (a.against != AttackTarget::kTrained) {
      rep.attacks.push_back(run_attack_setting(init, data.train, tc, a, seed, "dummy",
                                               cfg.training.threads));
    }
    if (a.against != AttackTarget::kDummy) {
      rep.attacks.push_back(run_attack_setting(trained.params, data.train, tc, a, seed,
                                               "trained", cfg.training.threads));
    }
  }
  if (timings) timings->attack_seconds.push_back(detail::seconds_since(t0));
  return rep;
}

// Runs every replicate. When cfg.output_dir is set the record, config,
// traces and timings are persisted there.
inline ResultsRecord run_experiment(const ExperimentConfig& cfg_in) {
  const auto t_start = std::chrono::steady_clock::now();
  ExperimentConfig cfg = cfg_in;
  validate(cfg);
  Datasets data;
  try {
    data = load_datasets(cfg.dataset);
  } catch (const DataError& e) {
    throw DataError("experiment '" + cfg.name + "': " + e.what());
  }
  ModelSpec spec = cfg.model;
  spec.input = data.train.front().x.shape;
  spec.validate();

  ResultsRecord rec;
  rec.config = cfg;
  rec.config_hash = config_hash(cfg);
  for (std::uint64_t seed : cfg.seeds) {
    rec.replicates.push_back(run_replicate(cfg, spec, data, seed, &rec.timings));
  }
  rec.timings.total_seconds = detail::seconds_since(t_start);

  if (!cfg.output_dir.empty()) {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    detail::write_file_atomic(dir / "config.json", to_json(cfg).dump(2) + "\n");
    const std::string record = to_json(rec).dump();
    detail::write_file_atomic(dir / "record.json", record + "\n");
    for (const ReplicateResult& r : rec.replicates) {
      std::ostringstream os;
      write_trace_jsonl(r.trace, os);
      detail::write_file_atomic(dir / ("trace_seed" + std::to_string(r.seed) + ".jsonl"),
                                os.str());
    }
    const json timings = {{"train_seconds", rec.timings.train_seconds},
                          {"attack_seconds", rec.timings.attack_seconds},
                          {"total_seconds", rec.timings.total_seconds}};
    detail::write_file_atomic(dir / "timings.json", timings.dump(2) + "\n");
    std::ofstream log(dir / "results.jsonl", std::ios::app);
    log << record << '\n';
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Reports.

// 17 significant digits round-trip every double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct ReportFiles {
  std::string accuracy_csv;
  std::string attacks_csv;
  std::vector<std::string> strips;
};

// accuracy.csv: one row per record (model, mechanism, epsilon cell).
// attacks.csv: one row per record and attack setting.
// strips/: one PGM per (setting, attacked image, channel) showing the
// ground truth followed by the reconstruction of every replicate.
inline ReportFiles emit_report(const std::vector<ResultsRecord>& records,
                               const std::string& out_dir) {
  if (records.empty()) throw ConfigError("emit_report needs at least one record");
  const fs::path dir(out_dir);
  fs::create_directories(dir / "strips");
  ReportFiles files;

  std::set<int> ks;
  for (const ResultsRecord& r : records) ks.insert(r.config.top_k.begin(), r.config.top_k.end());

  std::ostringstream acc;
  acc << "name,model,mechanism,epsilon_v,sigma,n_seeds,mean_test_accuracy";
  for (int k : ks) acc << ",mean_top" << k;
  acc << '\n';
  std::ostringstream att;
  att << "name,model,mechanism,epsilon_v,sigma,method,against,n_images,mean_ssim,median_mse\n";

  for (std::size_t ri = 0; ri < records.size(); ++ri) {
    const ResultsRecord& r = records[ri];
    const TrainingConfig& t = r.config.training;
    const std::string cell = r.config.name + "," + to_string(r.config.model.arch) + "," +
                             to_string(t.mechanism) + "," + format_double(t.epsilon_v) + "," +
                             format_double(t.sigma);
    acc << cell << ',' << r.replicates.size() << ',' << format_double(r.mean_test_accuracy());
    for (int k : ks) {
      double s = 0.0;
      std::size_t n = 0;
      for (const ReplicateResult& rep : r.replicates) {
        if (auto it = rep.top_k.find(k); it != rep.top_k.end()) {
          s += it->second;
          ++n;
        }
      }
      acc << ',';
      if (n > 0) acc << format_double(s / static_cast<double>(n));
    }
    acc << '\n';

    const auto pooled = pooled_attacks(r);
    for (std::size_t a = 0; a < pooled.size(); ++a) {
      const PooledAttack& p = pooled[a];
      att << cell << ',' << to_string(p.method) << ',' << p.against << ','
          << p.summary.per_image.size() << ',' << format_double(p.summary.mean_ssim) << ','
          << format_double(p.summary.median_mse) << '\n';
      const AttackResult& first = r.replicates.front().attacks[a];
      for (std::size_t im = 0; im < first.images.size(); ++im) {
        std::vector<ImageTensor> row = {first.images[im].ground_truth};
        for (const ReplicateResult& rep : r.replicates) {
          row.push_back(rep.attacks[a].images[im].reconstructed);
        }
        const ImageTensor strip = image_strip(row);
        for (int ch = 0; ch < strip.channels(); ++ch) {
          std::string name = "r" + std::to_string(ri) + "_" + r.config.name + "_" +
                             to_string(p.method) + "_" + p.against + "_img" +
                             std::to_string(im);
          if (strip.channels() > 1) name += "_c" + std::to_string(ch);
          const fs::path path = dir / "strips" / (name + ".pgm");
          write_pgm(path.string(), strip, ch);
          files.strips.push_back(path.string());
        }
      }
    }
  }
  files.accuracy_csv = (dir / "accuracy.csv").string();
  files.attacks_csv = (dir / "attacks.csv").string();
  detail::write_file_atomic(files.accuracy_csv, acc.str());
  detail::write_file_atomic(files.attacks_csv, att.str());
  return files;
}

struct VerifyResult {
  bool identical = false;
  std::string message;
};

// Re-runs the configuration stored in run_dir/config.json and compares the
// fresh record with run_dir/record.json byte for byte. Nothing is written.
inline VerifyResult verify_run(const std::string& run_dir) {
  const fs::path dir(run_dir);
  if (!fs::is_directory(dir)) throw DataError("no run directory " + run_dir);
  ExperimentConfig cfg = load_experiment_config((dir / "config.json").string());
  std::ifstream f(dir / "record.json", std::ios::binary);
  if (!f) throw DataError("missing " + (dir / "record.json").string());
  std::string stored((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  cfg.output_dir.clear();
  const std::string fresh = to_json(run_experiment(cfg)).dump() + "\n";
  if (fresh == stored) return {true, "record.json reproduced byte for byte"};
  std::size_t i = 0;
  while (i < fresh.size() && i < stored.size() && fresh[i] == stored[i]) ++i;
  return {false, "first difference at byte " + std::to_string(i)};
}

}  // namespace dirdp

#endif  // DIRDP_EXPERIMENT_HPP_
