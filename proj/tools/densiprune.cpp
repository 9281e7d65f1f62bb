// Copyright 2026 The densiprune Authors. All Rights Reserved.
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

// densiprune command-line front end.
//
//   densiprune train            --config run.ini
//   densiprune prune-run        --config run.ini
//   densiprune cost             vgg19 vgg19:18,23,47,...
//   densiprune reproduce-tables
//   densiprune export-colormap  --config run.ini --checkpoint model.ckpt
//   densiprune arch             resnet18

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "json.hpp"

#include "densiprune/checkpoint.hpp"
#include "densiprune/colormap.hpp"
#include "densiprune/config.hpp"
#include "densiprune/cost.hpp"
#include "densiprune/prune.hpp"
#include "densiprune/reference_tables.hpp"
#include "densiprune/train.hpp"

namespace fs = std::filesystem;
using namespace densiprune;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  bool json = false;
};

void write_file_atomic(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + tmp.string());
    f << contents;
    if (!f) throw ConfigError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream f(path, std::ios::app | std::ios::binary);
  if (!f) throw ConfigError("cannot append to " + path.string());
  f << line << '\n';
  f.flush();
}

// Wall-clock stamps live only here so every other output stays reproducible.
class RunLog {
 public:
  explicit RunLog(const fs::path& path) : out_(path, std::ios::app) {}

  template <typename... Args>
  void operator()(fmt::format_string<Args...> f, Args&&... args) {
    const auto now = std::chrono::system_clock::now();
    const std::string msg = fmt::format(f, std::forward<Args>(args)...);
    out_ << fmt::format("{:%Y-%m-%dT%H:%M:%S} {}\n",
                        std::chrono::floor<std::chrono::seconds>(now), msg);
    out_.flush();
    std::cerr << msg << '\n';
  }

 private:
  std::ofstream out_;
};

RunConfig load_run_config(const CommonOptions& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  RunConfig c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.output_dir.empty()) c.output_dir = o.output_dir;
  return c;
}

FeatureShape input_shape_of(const Dataset& d) {
  return {d.images.dim(1), d.images.dim(2), d.images.dim(3)};
}

std::string stage_label(const StageRecord& s) {
  return s.role == StageRole::final ? "final" : fmt::format("net{}", s.network_index);
}

std::string stage_summary(const StageRecord& s) {
  const std::string rho = s.role == StageRole::final ? "-"
                          : s.saturated ? fmt::format("{}", s.epochs_trained)
                                        : fmt::format("{} (budget)", s.epochs_trained);
  return fmt::format(
      "{:<6} net{}  sizes [{}]  epochs {}  epochs to rho {}  params reduction "
      "{:.2f}x  ops reduction {:.2f}x  accuracy {:.2f}%",
      stage_label(s), s.network_index, fmt::join(prunable_sizes(s.arch), ", "),
      s.epochs_trained, rho, s.cost.params_reduction, s.cost.ops_reduction,
      100.0 * s.final_accuracy);
}

// Shared by train and prune-run; train is a run with no pruning rounds and
// epochs_budget epochs of final training.
int run_experiment(const CommonOptions& opts, bool prune) {
  RunConfig cfg = load_run_config(opts);
  if (!prune) {
    cfg.criteria.max_rounds = 0;
    cfg.criteria.final_train_epochs = cfg.epochs_budget;
  }
  const TrainTestData data = load_datasets(cfg.dataset, cfg.seed);
  const ArchSpec arch = resolve(resolve_arch_ref(
      cfg.arch, input_shape_of(data.train), data.train.num_classes));

  fs::create_directories(cfg.output_dir);
  const fs::path out = cfg.output_dir;
  write_file_atomic(out / "resolved_config.ini", resolved_config_text(cfg));
  write_file_atomic(out / "events.jsonl", "");
  write_file_atomic(out / "stages.jsonl", "");
  RunLog log(out / "run.log");
  log("{} {} on {} ({} train / {} test), seed {}", prune ? "prune-run" : "train",
      arch.name, data.train.name, data.train.count(), data.test.count(), cfg.seed);

  TrainerSettings settings;
  settings.optimizer = cfg.optimizer;
  settings.batch_size = cfg.batch_size;
  NetworkStageTrainer trainer(data.train, data.test, settings);
  trainer.set_epoch_callback(
      [&log](int index, StageRole role, const AeSample& s) {
        log("  {} epoch {:>3}  loss {:.4f}  accuracy {:.4f}  total AE {:.4f}",
            role == StageRole::final ? "final" : fmt::format("net{}", index),
            s.epoch, s.train_loss, s.accuracy, s.total_ae);
      });

  RunObserver observer;
  observer.on_stage = [&](const StageRecord& s) {
    const std::string name = s.role == StageRole::final
                                 ? std::string("ae_history.csv")
                                 : fmt::format("ae_history_net{}.csv", s.network_index);
    write_file_atomic(out / name, ae_csv(s.history));
    append_line(out / "stages.jsonl", to_json(s).dump());
    if (!opts.json) std::cout << stage_summary(s) << std::endl;
    log("stage done: {}", stage_summary(s));
  };
  observer.on_prune = [&](const PruneEvent& e) {
    append_line(out / "events.jsonl", to_json(e).dump());
    log("pruned net{} at epoch {}: [{}] -> [{}]", e.from_index, e.epoch,
        fmt::join(e.old_sizes, ","), fmt::join(e.new_sizes, ","));
  };

  PruneRunConfig run;
  run.arch = arch;
  run.criteria = cfg.criteria;
  run.epochs_budget = cfg.epochs_budget;
  run.seed = cfg.seed;
  PruneRunResult result = run_pruning_in_training(run, trainer, observer);

  const StageRecord& final_stage = result.stages.back();
  nlohmann::json report = to_json(final_stage.cost);
  report["baseline"] = to_json(network_cost(arch));
  write_file_atomic(out / "cost_report.json", report.dump(2) + "\n");
  save_checkpoint(result.final_model, out / "model.ckpt");

  nlohmann::json metrics = {
      {"final_accuracy", final_stage.final_accuracy},
      {"final_network_index", final_stage.network_index},
      {"prune_events", result.events.size()},
      {"params", final_stage.cost.total_params},
      {"macs", final_stage.cost.total_macs},
      {"params_reduction", final_stage.cost.params_reduction},
      {"ops_reduction", final_stage.cost.ops_reduction}};
  write_file_atomic(out / "metrics.json", metrics.dump(2) + "\n");
  if (opts.json) std::cout << metrics.dump(2) << std::endl;
  log("done: final accuracy {:.4f}, {} prune events", final_stage.final_accuracy,
      result.events.size());
  return kExitOk;
}

struct CostOptionsCli {
  std::vector<std::string> refs;
  std::string input = "3,32,32";
  Index classes = 10;
  bool exclude_projections = false;
  bool include_bias = false;
};

FeatureShape parse_input(const std::string& s) {
  std::vector<Index> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stoll(item));
    } catch (const std::exception&) {
      throw ConfigError("bad --input '" + s + "', expected c,h,w");
    }
  }
  if (v.size() != 3) throw ConfigError("bad --input '" + s + "', expected c,h,w");
  return {v[0], v[1], v[2]};
}

std::string cost_text(const CostReport& r) {
  std::string s = fmt::format("{}\n", r.arch_name);
  s += fmt::format("  {:>5} {:<20} {:>5} {:>5} {:>2} {:>4} {:>4} {:>14} {:>12}\n",
                   "layer", "part", "N", "M", "k", "I", "O", "MACs", "params");
  for (const auto& l : r.per_layer) {
    s += fmt::format("  {:>5} {:<20} {:>5} {:>5} {:>2} {:>4} {:>4} {:>14} {:>12}\n",
                     l.layer_index, l.part, l.N, l.M, l.k, l.I, l.O, l.macs,
                     l.params);
  }
  s += fmt::format("  total MACs {}  total params {}\n", r.total_macs,
                   r.total_params);
  return s;
}

int run_cost(const CostOptionsCli& o, bool json) {
  const FeatureShape input = parse_input(o.input);
  CostOptions options;
  options.count_projections = !o.exclude_projections;
  options.include_bias = o.include_bias;
  const CostReport base =
      network_cost(resolve_arch_ref(o.refs.at(0), input, o.classes), options);
  const CostReport other =
      o.refs.size() > 1
          ? compare(base, network_cost(resolve_arch_ref(o.refs[1], input, o.classes),
                                       options))
          : compare(base, base);
  if (json) {
    std::cout << nlohmann::json{{"baseline", to_json(base)},
                                {"pruned", to_json(other)},
                                {"ops_reduction", other.ops_reduction},
                                {"params_reduction", other.params_reduction}}
                     .dump(2)
              << std::endl;
  } else {
    std::cout << cost_text(base);
    if (o.refs.size() > 1) std::cout << cost_text(other);
    std::cout << fmt::format("ops reduction {:.4f}x  params reduction {:.4f}x\n",
                             other.ops_reduction, other.params_reduction);
  }
  return kExitOk;
}

int run_tables(bool json, bool exclude_projections) {
  CostOptions options;
  options.count_projections = !exclude_projections;
  const auto cells = reproduce_tables(options);
  bool all = true;
  int outside = 0;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cells) {
    if (c.gating) all = all && c.pass;
    if (!c.gating && !c.pass) ++outside;
    if (json) {
      arr.push_back({{"table", c.table},
                     {"cell", c.cell},
                     {"recomputed", c.recomputed},
                     {"published", c.published},
                     {"tolerance", c.tolerance},
                     {"relative", c.relative},
                     {"derivable", c.derivable},
                     {"pass", c.pass},
                     {"gating", c.gating},
                     {"note", c.note}});
      continue;
    }
    const std::string status = !c.derivable ? "CONST" : c.pass ? "PASS" : "FAIL";
    const std::string tol = c.relative ? fmt::format("+-{:.0f}%", 100 * c.tolerance)
                                       : fmt::format("+-{}", c.tolerance);
    std::cout << fmt::format("{:<5} {:<6} {:<44} recomputed {:>9.3f}  published {:>8.2f}  {}",
                             status, c.table, c.cell, c.recomputed, c.published, tol);
    if (!c.note.empty()) std::cout << "  (" << c.note << ")";
    std::cout << '\n';
  }
  if (json) {
    std::cout << arr.dump(2) << std::endl;
  } else {
    std::cout << fmt::format(
        "complexity cells: {}; table1 reduction checks outside tolerance: {}\n",
        all ? "all pass" : "FAILURES", outside);
  }
  return all ? kExitOk : kExitInternal;
}

struct ColormapCli {
  std::string checkpoint;
  std::vector<size_t> layers;
  Index image = 0;
};

int run_colormap(const CommonOptions& opts, const ColormapCli& o) {
  const RunConfig cfg = load_run_config(opts);
  Network<float> model = load_checkpoint(o.checkpoint);
  const TrainTestData data = load_datasets(cfg.dataset, cfg.seed);
  if (o.image < 0 || o.image >= data.test.count()) {
    throw ConfigError(fmt::format("--image {} out of range (test set has {})",
                                  o.image, data.test.count()));
  }
  std::vector<size_t> layers = o.layers;
  if (layers.empty()) {
    for (size_t i = 0; i < model.arch().layers.size(); ++i) {
      if (model.arch().layers[i].measure_ae) layers.push_back(i);
    }
  }
  const Batch one = batches(data.test, BatchPlan::sequential(data.test.count(), 1))[o.image];
  const ColormapExport ex = compute_colormaps(model, one.images, layers, o.image);
  fs::create_directories(cfg.output_dir);
  nlohmann::json index = nlohmann::json::array();
  for (size_t j = 0; j < ex.layer_indices.size(); ++j) {
    const std::string stem =
        fmt::format("colormap_image{}_layer{}", o.image, ex.layer_indices[j]);
    write_pgm(cfg.output_dir / (stem + ".pgm"), ex.matrices[j]);
    write_matrix_csv(cfg.output_dir / (stem + ".csv"), ex.matrices[j]);
    index.push_back({{"layer", ex.layer_indices[j]},
                     {"rows", ex.matrices[j].rows()},
                     {"cols", ex.matrices[j].cols()},
                     {"pgm", stem + ".pgm"},
                     {"csv", stem + ".csv"}});
    if (!opts.json) {
      std::cout << fmt::format("layer {}: {}x{} -> {}.pgm, {}.csv\n",
                               ex.layer_indices[j], ex.matrices[j].rows(),
                               ex.matrices[j].cols(), stem, stem);
    }
  }
  if (opts.json) std::cout << index.dump(2) << std::endl;
  return kExitOk;
}

void apply_thread_limit() {
  if (const char* env = std::getenv("DENSIPRUNE_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) Eigen::setNbThreads(n);
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad DENSIPRUNE_THREADS '") + env + "'");
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Activation-density pruning in training"};
  app.require_subcommand(1);
  CommonOptions common;

  auto add_common = [&common](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", common.config, "run configuration (INI)");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "override the configured seed");
    sub->add_option("--output-dir", common.output_dir,
                    "override the configured output directory");
    sub->add_flag("--json", common.json, "machine-readable output on stdout");
  };

  auto* train = app.add_subcommand("train", "train one fixed architecture");
  add_common(train, true);
  auto* prune = app.add_subcommand("prune-run", "train with pruning rounds");
  add_common(prune, true);

  CostOptionsCli cost_opts;
  auto* cost = app.add_subcommand("cost", "MACs and parameters of one or two architectures");
  cost->add_option("archs", cost_opts.refs,
                   "baseline and optional pruned arch: builtin name, file, or name:s0,s1,...")
      ->required()
      ->expected(1, 2);
  cost->add_option("--input", cost_opts.input, "input shape c,h,w");
  cost->add_option("--classes", cost_opts.classes, "number of classes");
  cost->add_flag("--exclude-projections", cost_opts.exclude_projections,
                 "do not count residual projection convs");
  cost->add_flag("--include-bias", cost_opts.include_bias, "count biases as parameters");
  cost->add_flag("--json", common.json, "JSON on stdout");

  bool tables_exclude_projections = false;
  auto* tables = app.add_subcommand("reproduce-tables",
                                    "recompute the published cost tables");
  tables->add_flag("--json", common.json, "JSON on stdout");
  tables->add_flag("--exclude-projections", tables_exclude_projections,
                   "do not count residual projection convs");

  ColormapCli cm;
  auto* colormap = app.add_subcommand("export-colormap",
                                      "channel-mean activation maps for one test image");
  add_common(colormap, true);
  colormap->add_option("--checkpoint", cm.checkpoint, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  colormap->add_option("--layers", cm.layers, "layer indices (default: every measured relu)")
      ->delimiter(',');
  colormap->add_option("--image", cm.image, "test-set image index");

  std::string arch_ref;
  CostOptionsCli arch_opts;
  auto* arch = app.add_subcommand("arch", "print an architecture in text form");
  arch->add_option("arch", arch_ref, "builtin name, file, or name:s0,s1,...")->required();
  arch->add_option("--input", arch_opts.input, "input shape c,h,w");
  arch->add_option("--classes", arch_opts.classes, "number of classes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    apply_thread_limit();
    if (*train) return run_experiment(common, false);
    if (*prune) return run_experiment(common, true);
    if (*cost) return run_cost(cost_opts, common.json);
    if (*tables) return run_tables(common.json, tables_exclude_projections);
    if (*colormap) return run_colormap(common, cm);
    if (*arch) {
      std::cout << to_text(resolve_arch_ref(arch_ref, parse_input(arch_opts.input),
                                            arch_opts.classes));
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ArchError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
