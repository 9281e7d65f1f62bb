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

#include "densiprune/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "densiprune/rng.hpp"

namespace densiprune {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kTopKeys = {"seed", "epochs_budget", "output_dir",
                                        "arch"};
const std::set<std::string> kDatasetKeys = {
    "kind",        "train_images", "train_labels", "test_images",
    "test_labels", "train_files",  "test_files",   "num_classes",
    "n_per_class", "mean",         "std"};
const std::set<std::string> kOptimizerKeys = {
    "learning_rate", "momentum", "weight_decay", "batch_size", "schedule"};
const std::set<std::string> kCriteriaKeys = {
    "rho_tolerance",       "rho_window",   "rho_min_epochs",
    "delta_slope_tolerance", "delta_warmup_epochs", "max_rounds",
    "final_train_epochs"};

template <typename T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
  const auto node = tree.get_optional<std::string>(key);
  if (!node) return fallback;
  try {
    return boost::lexical_cast<T>(boost::trim_copy(*node));
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError(fmt::format("config key '{}': cannot parse '{}'", key,
                                  *node));
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(","));
  std::vector<std::string> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

std::vector<float> float_list(const std::string& key, const std::string& s) {
  std::vector<float> out;
  for (const auto& p : split_list(s)) {
    try {
      out.push_back(boost::lexical_cast<float>(p));
    } catch (const boost::bad_lexical_cast&) {
      throw ConfigError(fmt::format("config key '{}': bad number '{}'", key, p));
    }
  }
  return out;
}

fs::path resolve_path(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void check_keys(const pt::ptree& section, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, child] : section) {
    if (!child.empty()) continue;  // sections handled by the caller
    if (!allowed.count(key)) {
      throw ConfigError(fmt::format("unknown config key '{}' in {}", key,
                                    where));
    }
  }
}

std::vector<LrStep> parse_schedule(const std::string& text) {
  std::vector<LrStep> out;
  if (text.empty() || text == "auto") return out;
  for (const auto& item : split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("schedule entries look like epoch:multiplier, got '" +
                        item + "'");
    }
    try {
      out.push_back({boost::lexical_cast<int>(item.substr(0, colon)),
                     boost::lexical_cast<double>(item.substr(colon + 1))});
    } catch (const boost::bad_lexical_cast&) {
      throw ConfigError("bad schedule entry '" + item + "'");
    }
  }
  return out;
}

void require_file(const fs::path& p, const std::string& key) {
  if (p.empty()) throw ConfigError("config key '" + key + "' is required");
  if (!fs::exists(p)) {
    throw ConfigError("dataset path does not exist: " + p.string());
  }
}

}  // namespace

RunConfig parse_config(std::string_view text, const fs::path& base_dir) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  for (const auto& [key, child] : tree) {
    if (!child.empty() && key != "dataset" && key != "optimizer" &&
        key != "criteria") {
      throw ConfigError("unknown config section [" + key + "]");
    }
  }
  check_keys(tree, kTopKeys, "top level");

  RunConfig c;
  c.seed = get<std::uint64_t>(tree, "seed", c.seed);
  c.epochs_budget = get<int>(tree, "epochs_budget", c.epochs_budget);
  c.output_dir = resolve_path(
      base_dir, get<std::string>(tree, "output_dir", c.output_dir.string()));
  c.arch = get<std::string>(tree, "arch", c.arch);
  if (const fs::path arch_path = resolve_path(base_dir, c.arch);
      c.arch.find(':') == std::string::npos && fs::exists(arch_path)) {
    c.arch = arch_path.string();
  }

  const pt::ptree empty;
  const auto& ds = tree.get_child("dataset", empty);
  check_keys(ds, kDatasetKeys, "[dataset]");
  DatasetConfig& d = c.dataset;
  d.kind = get<std::string>(ds, "kind", d.kind);
  if (d.kind != "idx" && d.kind != "cifar") {
    throw ConfigError("dataset.kind must be idx or cifar, got '" + d.kind + "'");
  }
  d.norm = d.kind == "idx" ? Normalization::grayscale() : Normalization::cifar();
  d.train_images = resolve_path(base_dir, get<std::string>(ds, "train_images", ""));
  d.train_labels = resolve_path(base_dir, get<std::string>(ds, "train_labels", ""));
  d.test_images = resolve_path(base_dir, get<std::string>(ds, "test_images", ""));
  d.test_labels = resolve_path(base_dir, get<std::string>(ds, "test_labels", ""));
  for (const auto& f : split_list(get<std::string>(ds, "train_files", ""))) {
    d.train_files.push_back(resolve_path(base_dir, f));
  }
  for (const auto& f : split_list(get<std::string>(ds, "test_files", ""))) {
    d.test_files.push_back(resolve_path(base_dir, f));
  }
  d.num_classes = get<int>(ds, "num_classes", d.num_classes);
  d.n_per_class = get<Index>(ds, "n_per_class", d.n_per_class);
  if (const auto m = ds.get_optional<std::string>("mean")) {
    d.norm.mean = float_list("dataset.mean", *m);
  }
  if (const auto s = ds.get_optional<std::string>("std")) {
    d.norm.stddev = float_list("dataset.std", *s);
  }

  const auto& op = tree.get_child("optimizer", empty);
  check_keys(op, kOptimizerKeys, "[optimizer]");
  c.optimizer.learning_rate = get<double>(op, "learning_rate", c.optimizer.learning_rate);
  c.optimizer.momentum = get<double>(op, "momentum", c.optimizer.momentum);
  c.optimizer.weight_decay = get<double>(op, "weight_decay", c.optimizer.weight_decay);
  c.optimizer.schedule = parse_schedule(get<std::string>(op, "schedule", "auto"));
  c.batch_size = get<Index>(op, "batch_size", c.batch_size);

  const auto& cr = tree.get_child("criteria", empty);
  check_keys(cr, kCriteriaKeys, "[criteria]");
  PruneCriteria& p = c.criteria;
  p.rho_tolerance = get<double>(cr, "rho_tolerance", p.rho_tolerance);
  p.rho_window = get<int>(cr, "rho_window", p.rho_window);
  p.rho_min_epochs = get<int>(cr, "rho_min_epochs", p.rho_min_epochs);
  p.delta_slope_tolerance = get<double>(cr, "delta_slope_tolerance", p.delta_slope_tolerance);
  p.delta_warmup_epochs = get<int>(cr, "delta_warmup_epochs", p.delta_warmup_epochs);
  p.max_rounds = get<int>(cr, "max_rounds", p.max_rounds);
  p.final_train_epochs = get<int>(cr, "final_train_epochs", p.final_train_epochs);

  c.optimizer.validate();
  c.criteria.validate();
  if (c.batch_size < 1) throw ConfigError("optimizer.batch_size must be >= 1");
  if (c.epochs_budget < 1) throw ConfigError("epochs_budget must be >= 1");
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string resolved_config_text(const RunConfig& c) {
  auto join_paths = [](const std::vector<fs::path>& v) {
    std::vector<std::string> s;
    for (const auto& p : v) s.push_back(p.string());
    return fmt::format("{}", fmt::join(s, ","));
  };
  std::string schedule;
  if (c.optimizer.schedule.empty()) {
    schedule = "auto";
  } else {
    std::vector<std::string> parts;
    for (const auto& s : c.optimizer.schedule) {
      parts.push_back(fmt::format("{}:{}", s.epoch, s.multiplier));
    }
    schedule = fmt::format("{}", fmt::join(parts, ","));
  }
  const auto& d = c.dataset;
  const auto& p = c.criteria;
  std::string out;
  out += fmt::format("seed = {}\n", c.seed);
  out += fmt::format("epochs_budget = {}\n", c.epochs_budget);
  out += fmt::format("output_dir = {}\n", c.output_dir.string());
  out += fmt::format("arch = {}\n", c.arch);
  out += "\n[dataset]\n";
  out += fmt::format("kind = {}\n", d.kind);
  if (d.kind == "idx") {
    out += fmt::format("train_images = {}\n", d.train_images.string());
    out += fmt::format("train_labels = {}\n", d.train_labels.string());
    out += fmt::format("test_images = {}\n", d.test_images.string());
    out += fmt::format("test_labels = {}\n", d.test_labels.string());
  } else {
    out += fmt::format("train_files = {}\n", join_paths(d.train_files));
    out += fmt::format("test_files = {}\n", join_paths(d.test_files));
  }
  out += fmt::format("num_classes = {}\n", d.num_classes);
  out += fmt::format("n_per_class = {}\n", d.n_per_class);
  out += fmt::format("mean = {}\n", fmt::join(d.norm.mean, ","));
  out += fmt::format("std = {}\n", fmt::join(d.norm.stddev, ","));
  out += "\n[optimizer]\n";
  out += fmt::format("learning_rate = {}\n", c.optimizer.learning_rate);
  out += fmt::format("momentum = {}\n", c.optimizer.momentum);
  out += fmt::format("weight_decay = {}\n", c.optimizer.weight_decay);
  out += fmt::format("batch_size = {}\n", c.batch_size);
  out += fmt::format("schedule = {}\n", schedule);
  out += "\n[criteria]\n";
  out += fmt::format("rho_tolerance = {}\n", p.rho_tolerance);
  out += fmt::format("rho_window = {}\n", p.rho_window);
  out += fmt::format("rho_min_epochs = {}\n", p.rho_min_epochs);
  out += fmt::format("delta_slope_tolerance = {}\n", p.delta_slope_tolerance);
  out += fmt::format("delta_warmup_epochs = {}\n", p.delta_warmup_epochs);
  out += fmt::format("max_rounds = {}\n", p.max_rounds);
  out += fmt::format("final_train_epochs = {}\n", p.final_train_epochs);
  return out;
}

TrainTestData load_datasets(const DatasetConfig& d, std::uint64_t seed) {
  TrainTestData out;
  if (d.kind == "idx") {
    require_file(d.train_images, "dataset.train_images");
    require_file(d.train_labels, "dataset.train_labels");
    require_file(d.test_images, "dataset.test_images");
    require_file(d.test_labels, "dataset.test_labels");
    out.train = load_idx(d.train_images, d.train_labels, d.num_classes, d.norm);
    out.test = load_idx(d.test_images, d.test_labels, d.num_classes, d.norm);
  } else {
    if (d.train_files.empty() || d.test_files.empty()) {
      throw ConfigError("cifar datasets need train_files and test_files");
    }
    for (const auto& f : d.train_files) require_file(f, "dataset.train_files");
    for (const auto& f : d.test_files) require_file(f, "dataset.test_files");
    out.train = load_cifar_binary(d.train_files, d.num_classes, d.norm);
    out.test = load_cifar_binary(d.test_files, d.num_classes, d.norm);
  }
  if (d.n_per_class > 0) {
    out.train = subset(out.train, d.n_per_class,
                       derive_seed(seed, SeedPurpose::subset));
  }
  return out;
}

ArchSpec resolve_arch_ref(std::string_view ref, FeatureShape input,
                          Index num_classes) {
  const std::string s(ref);
  if (const auto colon = s.find(':'); colon != std::string::npos) {
    const ArchSpec base = builtin_arch(s.substr(0, colon), input, num_classes);
    std::vector<Index> sizes;
    for (const auto& item : split_list(s.substr(colon + 1))) {
      try {
        sizes.push_back(boost::lexical_cast<Index>(item));
      } catch (const boost::bad_lexical_cast&) {
        throw ConfigError("bad channel count '" + item + "' in '" + s + "'");
      }
    }
    ArchSpec a = with_prunable_sizes(base, sizes);
    return a;
  }
  if (fs::exists(s)) {
    ArchSpec a = load_arch_file(s);
    return a;
  }
  return builtin_arch(s, input, num_classes);
}

}  // namespace densiprune
