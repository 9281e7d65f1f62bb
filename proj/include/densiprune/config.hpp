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

// Run configuration: an INI file with top-level keys plus [dataset],
// [optimizer] and [criteria] sections. Every key has a default; unknown keys
// are rejected. See docs/FORMATS.md for the schema.

#ifndef DENSIPRUNE_CONFIG_HPP
#define DENSIPRUNE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "densiprune/arch.hpp"
#include "densiprune/data.hpp"
#include "densiprune/optimizer.hpp"
#include "densiprune/prune.hpp"

namespace densiprune {

struct DatasetConfig {
  std::string kind = "idx";  // idx | cifar
  std::filesystem::path train_images, train_labels;
  std::filesystem::path test_images, test_labels;
  std::vector<std::filesystem::path> train_files, test_files;  // cifar
  int num_classes = 10;
  Index n_per_class = 0;  // training subset size per class, 0 = all
  Normalization norm = Normalization::grayscale();
};

struct RunConfig {
  DatasetConfig dataset;
  std::string arch = "vgg-lite";  // builtin name, file, or name:s0,s1,...
  OptimizerConfig optimizer;      // empty schedule = default per stage
  Index batch_size = 128;
  PruneCriteria criteria;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  int epochs_budget = 30;
};

/// Relative paths resolve against `base_dir`.
RunConfig parse_config(std::string_view text,
                       const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Every effective value, defaults included, in the same INI schema.
std::string resolved_config_text(const RunConfig& config);

struct TrainTestData {
  Dataset train;
  Dataset test;
};

/// Loads both splits; applies the per-class training subset if requested.
TrainTestData load_datasets(const DatasetConfig& config, std::uint64_t seed);

/// A builtin name ("vgg-lite"), an architecture file, or a builtin with
/// explicit prunable sizes ("vgg19:18,23,47,...").
ArchSpec resolve_arch_ref(std::string_view ref, FeatureShape input,
                          Index num_classes);

}  // namespace densiprune

#endif  // DENSIPRUNE_CONFIG_HPP
