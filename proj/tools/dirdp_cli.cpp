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

// Command-line front end. Exit codes: 0 success, 1 failed check or
// unexpected error, 2 configuration error, 3 data error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dirdp/dirdp.hpp"

namespace {

using dirdp::json;
namespace fs = std::filesystem;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

// Flag-backed mirror of the ExperimentConfig fields shared by several
// subcommands.
struct CommonFlags {
  std::string dataset = "mnist_subset";
  std::string data_path = "data/mnist5k";
  std::size_t n_train = 2000;
  std::size_t n_test = 500;
  int image_size = 0;
  int classes = 10;
  int channels = 1;
  std::uint64_t synth_seed = 0;

  std::string arch = "mlp";
  int hidden = 128;

  std::string mechanism = "none";
  double epsilon_v = 0.0;
  double sigma = 0.0;
  bool halve_epsilon = false;
  double clip = 1.0;
  double batch = 64;
  double lr = 0.1;
  int epochs = 1;
  std::int64_t steps = 0;
  std::string sampling = "poisson";
  std::string vmf_scope = "concatenated";
  unsigned threads = 1;

  std::uint64_t seed = 0;
};

void add_dataset_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--dataset", f.dataset, "mnist_subset or synthetic")->capture_default_str();
  app->add_option("--data", f.data_path, "directory with MNIST IDX files")->capture_default_str();
  app->add_option("--n-train", f.n_train)->capture_default_str();
  app->add_option("--n-test", f.n_test)->capture_default_str();
  app->add_option("--image-size", f.image_size, "resize to NxN (0 = native)")
      ->capture_default_str();
  app->add_option("--classes", f.classes, "synthetic only")->capture_default_str();
  app->add_option("--channels", f.channels, "synthetic only")->capture_default_str();
  app->add_option("--synth-seed", f.synth_seed, "synthetic only")->capture_default_str();
}

void add_model_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--arch", f.arch, "mlp or lenet-small")->capture_default_str();
  app->add_option("--hidden", f.hidden, "MLP hidden width")->capture_default_str();
}

void add_mechanism_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--mechanism", f.mechanism, "none, gaussian or vmf")->capture_default_str();
  app->add_option("--epsilon-v", f.epsilon_v, "VMF concentration")->capture_default_str();
  app->add_option("--sigma", f.sigma, "Gaussian noise scale")->capture_default_str();
  app->add_flag("--halve-epsilon", f.halve_epsilon, "use epsilon_v / 2 as the concentration");
  app->add_option("--clip", f.clip, "norm bound C")->capture_default_str();
  app->add_option("--vmf-scope", f.vmf_scope, "concatenated or per_layer")
      ->capture_default_str();
}

void add_training_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--batch", f.batch, "expected batch size L")->capture_default_str();
  app->add_option("--lr", f.lr, "learning rate")->capture_default_str();
  app->add_option("--epochs", f.epochs)->capture_default_str();
  app->add_option("--steps", f.steps, "overrides --epochs when > 0")->capture_default_str();
  app->add_option("--sampling", f.sampling, "poisson or fixed")->capture_default_str();
}

void add_seed_flag(CLI::App* app, CommonFlags& f) {
  app->add_option("--seed", f.seed, "master seed")->required();
  app->add_option("--threads", f.threads)->capture_default_str();
}

dirdp::ExperimentConfig to_experiment(const CommonFlags& f) {
  dirdp::ExperimentConfig c;
  if (f.dataset == "mnist_subset") {
    c.dataset.kind = dirdp::DatasetSpec::Kind::kMnistSubset;
    c.dataset.path = f.data_path;
    c.dataset.image_size = f.image_size;
  } else if (f.dataset == "synthetic") {
    c.dataset.kind = dirdp::DatasetSpec::Kind::kSynthetic;
    c.dataset.synth.classes = f.classes;
    c.dataset.synth.channels = f.channels;
    c.dataset.synth.image_size = f.image_size > 0 ? f.image_size : 8;
    c.dataset.synth.seed = f.synth_seed;
    c.dataset.image_size = c.dataset.synth.image_size;
  } else {
    throw dirdp::ConfigError("--dataset must be mnist_subset or synthetic");
  }
  c.dataset.n_train = f.n_train;
  c.dataset.n_test = f.n_test;
  c.model.arch = dirdp::parse_architecture(f.arch);
  c.model.hidden = f.hidden;
  dirdp::TrainingConfig& t = c.training;
  t.mechanism = dirdp::parse_mechanism(f.mechanism);
  t.epsilon_v = f.epsilon_v;
  t.sigma = f.sigma;
  t.halve_epsilon = f.halve_epsilon;
  t.clip_bound = f.clip;
  t.expected_batch = f.batch;
  t.learning_rate = f.lr;
  t.epochs = f.epochs;
  t.steps = f.steps;
  t.sampling = dirdp::parse_sampling(f.sampling);
  t.vmf_scope = dirdp::parse_vmf_scope(f.vmf_scope);
  t.threads = f.threads;
  t.seed = f.seed;
  c.seeds = {f.seed};
  return c;
}

dirdp::ModelSpec model_for(const dirdp::ExperimentConfig& c, const dirdp::Datasets& d) {
  dirdp::ModelSpec spec = c.model;
  spec.input = d.train.empty() ? d.test.front().x.shape : d.train.front().x.shape;
  spec.validate();
  return spec;
}

json eval_json(const dirdp::NetworkParams& params,
               const std::vector<dirdp::LabeledExample>& data) {
  const dirdp::EvalResult ev = dirdp::evaluate(params, data);
  json topk = json::object();
  for (int k : {1, 5}) {
    if (k <= params.spec().num_classes) {
      topk[std::to_string(k)] = dirdp::top_k_accuracy(ev.logits, ev.labels, k);
    }
  }
  return {{"n", data.size()}, {"accuracy", ev.accuracy}, {"loss", ev.loss}, {"top_k", topk}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw dirdp::DataError("cannot write " + path);
  f << text;
}

// --- subcommands -----------------------------------------------------------

int cmd_train(const CommonFlags& f, const std::string& out, const std::string& trace_path) {
  dirdp::ExperimentConfig c = to_experiment(f);
  dirdp::validate(c);
  const dirdp::Datasets d = dirdp::load_datasets(c.dataset);
  const dirdp::ModelSpec spec = model_for(c, d);
  const dirdp::TrainingResult r = dirdp::train(spec, d.train, d.test, c.training);
  {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw dirdp::DataError("cannot write " + out);
    dirdp::save_checkpoint(r.params, os);
  }
  if (!trace_path.empty()) {
    std::ostringstream os;
    dirdp::write_trace_jsonl(r.trace, os);
    write_text(trace_path, os.str());
  }
  json summary = {{"checkpoint", out}, {"steps", r.trace.steps.size()}};
  if (!d.test.empty()) summary["test"] = eval_json(r.params, d.test);
  std::cout << summary.dump() << '\n';
  return 0;
}

dirdp::NetworkParams load_checkpoint_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw dirdp::DataError("cannot open checkpoint " + path);
  return dirdp::load_checkpoint(is);
}

int cmd_eval(const CommonFlags& f, const std::string& checkpoint) {
  dirdp::ExperimentConfig c = to_experiment(f);
  const dirdp::NetworkParams params = load_checkpoint_file(checkpoint);
  const dirdp::Datasets d = dirdp::load_datasets(c.dataset);
  if (d.test.empty()) throw dirdp::ConfigError("eval needs --n-test >= 1");
  std::cout << eval_json(params, d.test).dump() << '\n';
  return 0;
}

struct AttackFlags {
  std::string method = "dlg";
  int iterations = 1000;
  double eta = 0.0;
  double alpha_tv = 1e-4;
  std::string hvp_mode = "finite_diff";
  std::string init = "uniform_random";
  int images = 10;
  std::string checkpoint;
  std::string out_dir = "attack_out";
};

int cmd_attack(const CommonFlags& f, const AttackFlags& a) {
  dirdp::ExperimentConfig c = to_experiment(f);
  dirdp::AttackSpec spec;
  spec.config.method = dirdp::parse_attack_method(a.method);
  spec.config.iterations = a.iterations;
  spec.config.eta = a.eta;
  spec.config.alpha_tv = a.alpha_tv;
  spec.config.hvp_mode = dirdp::parse_hvp_mode(a.hvp_mode);
  spec.config.init = dirdp::parse_attack_init(a.init);
  spec.config.seed = f.seed;
  spec.images = a.images;
  const bool trained = !a.checkpoint.empty();
  spec.against = trained ? dirdp::AttackTarget::kTrained : dirdp::AttackTarget::kDummy;
  c.attacks = {spec};
  dirdp::validate(c);
  const dirdp::Datasets d = dirdp::load_datasets(c.dataset);
  const dirdp::ModelSpec model = model_for(c, d);
  const dirdp::NetworkParams params =
      trained ? load_checkpoint_file(a.checkpoint) : dirdp::NetworkParams::random(model, f.seed);
  if (!(params.spec().input == model.input)) {
    throw dirdp::ConfigError("checkpoint input shape does not match the dataset");
  }
  const dirdp::AttackResult r =
      dirdp::run_attack_setting(params, d.train, c.training, spec, f.seed,
                                trained ? "trained" : "dummy", f.threads);
  fs::create_directories(a.out_dir);
  json images = json::array();
  for (const dirdp::AttackImageResult& im : r.images) {
    for (int ch = 0; ch < im.reconstructed.channels(); ++ch) {
      const std::string stem = "img" + std::to_string(im.index) +
                               (im.reconstructed.channels() > 1 ? "_c" + std::to_string(ch) : "");
      dirdp::write_pgm((fs::path(a.out_dir) / (stem + "_recon.pgm")).string(), im.reconstructed, ch);
      dirdp::write_pgm((fs::path(a.out_dir) / (stem + "_truth.pgm")).string(), im.ground_truth, ch);
    }
    images.push_back({{"index", im.index},
                      {"label", im.label},
                      {"final_ssim", im.score.ssim},
                      {"final_mse", im.score.mse},
                      {"best_loss", im.best_loss},
                      {"best_iteration", im.best_iteration},
                      {"diverged", im.diverged}});
  }
  const json report = {{"config", dirdp::to_json(c, false)},
                       {"against", r.against},
                       {"mean_ssim", r.summary.mean_ssim},
                       {"median_mse", r.summary.median_mse},
                       {"images", images}};
  write_text((fs::path(a.out_dir) / "report.json").string(), report.dump(2) + "\n");
  std::cout << json{{"mean_ssim", r.summary.mean_ssim}, {"median_mse", r.summary.median_mse}}.dump()
            << '\n';
  return 0;
}

int cmd_sample_vmf(std::size_t dim, double eps, std::size_t n, std::uint64_t seed,
                   const std::vector<double>& mu_in, const std::string& out) {
  if (dim < 2) throw dirdp::ConfigError("--dim must be >= 2");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw dirdp::ConfigError("--epsilon-v must be positive");
  const dirdp::VmfParams params{eps, dim};
  params.validate();
  const dirdp::UnitVector mu =
      mu_in.empty() ? dirdp::UnitVector::pole(dim) : dirdp::normalize(mu_in);
  if (mu.dim() != dim) throw dirdp::ConfigError("--mu must have --dim entries");
  std::ostringstream os;
  for (std::size_t k = 0; k < dim; ++k) os << (k ? "," : "") << 'x' << k;
  os << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    dirdp::RngStream rng = dirdp::RngStream::derive(seed, {i});
    const dirdp::UnitVector x = dirdp::vmf_sample(params, mu, rng);
    for (std::size_t k = 0; k < dim; ++k) os << (k ? "," : "") << dirdp::format_double(x[k]);
    os << '\n';
  }
  if (out.empty() || out == "-") {
    std::cout << os.str();
  } else {
    write_text(out, os.str());
  }
  return 0;
}

int cmd_check_grad(const CommonFlags& f, int examples, double tol) {
  dirdp::ExperimentConfig c = to_experiment(f);
  dirdp::DatasetSpec ds = c.dataset;
  ds.n_train = static_cast<std::size_t>(examples);
  ds.n_test = 0;
  const dirdp::Datasets d = dirdp::load_datasets(ds);
  const dirdp::ModelSpec spec = model_for(c, d);
  const dirdp::NetworkParams params = dirdp::NetworkParams::random(spec, f.seed);
  double worst = 0.0;
  for (const dirdp::LabeledExample& ex : d.train) {
    worst = std::max(worst, dirdp::check_gradient(params, ex).max_relative_error);
  }
  const bool ok = worst <= tol;
  std::cout << json{{"arch", dirdp::to_string(spec.arch)},
                    {"parameters", params.size()},
                    {"examples", d.train.size()},
                    {"max_relative_error", worst},
                    {"tolerance", tol},
                    {"pass", ok}}
                   .dump()
            << '\n';
  return ok ? 0 : kExitFailure;
}

int cmd_run(const std::string& config_path, const std::string& output_dir) {
  dirdp::ExperimentConfig c = dirdp::load_experiment_config(config_path);
  if (!output_dir.empty()) c.output_dir = output_dir;
  if (c.output_dir.empty()) throw dirdp::ConfigError("no output_dir in config or on the command line");
  const dirdp::ResultsRecord r = dirdp::run_experiment(c);
  std::cout << json{{"output_dir", c.output_dir},
                    {"config_hash", r.config_hash},
                    {"mean_test_accuracy", r.mean_test_accuracy()}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  std::vector<dirdp::ResultsRecord> records;
  for (const std::string& dir : run_dirs) {
    records.push_back(dirdp::load_results_record((fs::path(dir) / "record.json").string()));
  }
  const dirdp::ReportFiles files = dirdp::emit_report(records, out_dir);
  std::cout << json{{"accuracy_csv", files.accuracy_csv},
                    {"attacks_csv", files.attacks_csv},
                    {"strips", files.strips.size()}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_verify(const std::string& run_dir) {
  const dirdp::VerifyResult v = dirdp::verify_run(run_dir);
  std::cout << (v.identical ? "identical: " : "MISMATCH: ") << v.message << '\n';
  return v.identical ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directional privacy for DP-SGD: training, attacks and reports"};
  app.require_subcommand(1);

  CommonFlags common;

  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  std::string train_out, trace_out;
  add_dataset_flags(train, common);
  add_model_flags(train, common);
  add_mechanism_flags(train, common);
  add_training_flags(train, common);
  add_seed_flag(train, common);
  train->add_option("--out", train_out, "checkpoint path")->required();
  train->add_option("--trace", trace_out, "JSON-lines training trace");

  auto* attack = app.add_subcommand("attack", "reconstruct training images from gradients");
  AttackFlags af;
  add_dataset_flags(attack, common);
  add_model_flags(attack, common);
  add_mechanism_flags(attack, common);
  add_seed_flag(attack, common);
  attack->add_option("--method", af.method, "dlg or iga")->capture_default_str();
  attack->add_option("--iterations", af.iterations)->capture_default_str();
  attack->add_option("--attack-eta", af.eta, "0 = method default")->capture_default_str();
  attack->add_option("--alpha-tv", af.alpha_tv)->capture_default_str();
  attack->add_option("--hvp-mode", af.hvp_mode, "finite_diff or analytic_mlp")
      ->capture_default_str();
  attack->add_option("--init", af.init, "uniform_random or gaussian_random")
      ->capture_default_str();
  attack->add_option("--images", af.images)->capture_default_str();
  attack->add_option("--checkpoint", af.checkpoint, "trained weights (default: dummy weights)");
  attack->add_option("--out-dir", af.out_dir)->capture_default_str();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  std::string eval_ckpt;
  add_dataset_flags(eval, common);
  eval->add_option("--checkpoint", eval_ckpt)->required();

  auto* sample = app.add_subcommand("sample-vmf", "dump VMF samples as CSV");
  std::size_t dim = 3, n = 1000;
  double eps = 1.0;
  std::uint64_t sample_seed = 0;
  std::vector<double> mu;
  std::string sample_out;
  sample->add_option("--dim", dim)->capture_default_str();
  sample->add_option("--epsilon-v", eps)->capture_default_str();
  sample->add_option("-n,--count", n)->capture_default_str();
  sample->add_option("--seed", sample_seed)->required();
  sample->add_option("--mu", mu, "mean direction (default e1)")->delimiter(',');
  sample->add_option("--out", sample_out, "CSV path (default stdout)");

  auto* check = app.add_subcommand("check-grad", "finite-difference gradient audit");
  int check_examples = 3;
  double tol = 1e-5;
  add_dataset_flags(check, common);
  add_model_flags(check, common);
  add_seed_flag(check, common);
  check->add_option("--examples", check_examples)->capture_default_str();
  check->add_option("--tol", tol)->capture_default_str();

  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  std::string config_path, run_out;
  run->add_option("config", config_path)->required();
  run->add_option("--output-dir", run_out, "overrides output_dir in the config");

  auto* report = app.add_subcommand("report", "CSV tables and PGM strips from run directories");
  std::vector<std::string> run_dirs;
  std::string report_out = "report";
  report->add_option("runs", run_dirs, "run directories containing record.json")->required();
  report->add_option("--out-dir", report_out)->capture_default_str();

  auto* verify = app.add_subcommand("verify", "re-run a finished run and compare its record");
  std::string verify_dir;
  verify->add_option("run_dir", verify_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train) return cmd_train(common, train_out, trace_out);
    if (*attack) return cmd_attack(common, af);
    if (*eval) return cmd_eval(common, eval_ckpt);
    if (*sample) return cmd_sample_vmf(dim, eps, n, sample_seed, mu, sample_out);
    if (*check) return cmd_check_grad(common, check_examples, tol);
    if (*run) return cmd_run(config_path, run_out);
    if (*report) return cmd_report(run_dirs, report_out);
    if (*verify) return cmd_verify(verify_dir);
  } catch (const dirdp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dirdp::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
