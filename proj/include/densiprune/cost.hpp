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

// MAC and parameter accounting. Only conv and fc layers cost anything; an fc
// layer is treated as a 1x1 conv on a 1x1 map. Bias is excluded unless asked
// for. Residual projection convs are counted by default.

#ifndef DENSIPRUNE_COST_HPP
#define DENSIPRUNE_COST_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "densiprune/arch.hpp"

namespace densiprune {

struct LayerCost {
  size_t layer_index = 0;  // index into ArchSpec::layers
  std::string part;        // conv, fc, residual.conv1, residual.projection, ...
  Index N = 0;             // input channels
  Index M = 0;             // output channels
  Index k = 0;
  Index I = 0;  // input spatial size
  Index O = 0;  // output spatial size
  std::int64_t macs = 0;
  std::int64_t params = 0;
};

struct CostOptions {
  bool include_bias = false;
  bool count_projections = true;
};

struct CostReport {
  std::string arch_name;
  std::vector<LayerCost> per_layer;
  std::int64_t total_macs = 0;
  std::int64_t total_params = 0;
  double ops_reduction = 1.0;     // vs the baseline given to compare()
  double params_reduction = 1.0;
};

/// O^2 * N * k^2 * M.
std::int64_t layer_macs(Index N, Index M, Index k, Index O);
/// N * M * k^2.
std::int64_t layer_params(Index N, Index M, Index k);

CostReport network_cost(const ArchSpec& arch, const CostOptions& options = {});

double ops_reduction(const CostReport& baseline, const CostReport& pruned);
double params_reduction(const CostReport& baseline, const CostReport& pruned);

/// Copy of `pruned` with both reduction ratios filled in against `baseline`.
CostReport compare(const CostReport& baseline, const CostReport& pruned);

struct ComplexityStage {
  double reduction = 1.0;  // OPS (or parameter) reduction of this network
  double epochs = 0.0;     // epochs it was trained for
};

/// sum_i epochs_i / reduction_i.
double training_complexity(std::span<const ComplexityStage> stages);
/// Same sum with parameter reductions in place of OPS reductions.
double training_memory_complexity(std::span<const ComplexityStage> stages);

/// iterations * batch_size / train_size.
double iterations_to_epochs(std::int64_t iterations, std::int64_t batch_size,
                            std::int64_t train_size);

nlohmann::json to_json(const CostReport& report);

}  // namespace densiprune

#endif  // DENSIPRUNE_COST_HPP
