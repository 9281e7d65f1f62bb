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

#include "densiprune/cost.hpp"

#include <fmt/format.h>

namespace densiprune {

namespace {

void require_positive(std::initializer_list<Index> values, const char* what) {
  for (Index v : values) {
    if (v < 1) throw ArchError(std::string(what) + ": arguments must be >= 1");
  }
}

LayerCost conv_cost(size_t index, std::string part, Index n, Index m, Index k,
                    Index in, Index out, bool bias) {
  LayerCost c;
  c.layer_index = index;
  c.part = std::move(part);
  c.N = n;
  c.M = m;
  c.k = k;
  c.I = in;
  c.O = out;
  c.macs = layer_macs(n, m, k, out);
  c.params = layer_params(n, m, k) + (bias ? m : 0);
  return c;
}

double checked_stage_sum(std::span<const ComplexityStage> stages) {
  if (stages.empty()) throw ArchError("complexity needs at least one stage");
  double total = 0.0;
  for (const auto& s : stages) {
    if (!(s.reduction > 0.0) || s.epochs < 0.0) {
      throw ArchError("complexity stages need reduction > 0 and epochs >= 0");
    }
    total += s.epochs / s.reduction;
  }
  return total;
}

}  // namespace

std::int64_t layer_macs(Index N, Index M, Index k, Index O) {
  require_positive({N, M, k, O}, "layer_macs");
  return static_cast<std::int64_t>(O) * O * N * k * k * M;
}

std::int64_t layer_params(Index N, Index M, Index k) {
  require_positive({N, M, k}, "layer_params");
  return static_cast<std::int64_t>(N) * M * k * k;
}

CostReport network_cost(const ArchSpec& arch, const CostOptions& options) {
  const auto shapes = propagate_shapes(arch);
  CostReport r;
  r.arch_name = arch.name;
  const bool bias = options.include_bias;
  for (size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    const LayerShapes& s = shapes[i];
    switch (l.kind) {
      case LayerKind::conv:
        r.per_layer.push_back(conv_cost(i, "conv", s.in.channels, l.out_channels,
                                        l.kernel, s.in.height, s.out.height,
                                        bias));
        break;
      case LayerKind::fc: {
        const Index features = s.in.channels * s.in.height * s.in.width;
        r.per_layer.push_back(
            conv_cost(i, "fc", features, l.out_channels, 1, 1, 1, bias));
        break;
      }
      case LayerKind::residual_block: {
        const auto& b = l.block;
        r.per_layer.push_back(conv_cost(i, "residual.conv1", s.in.channels,
                                        b.conv1_channels, 3, s.in.height,
                                        s.mid.height, bias));
        r.per_layer.push_back(conv_cost(i, "residual.conv2", b.conv1_channels,
                                        b.conv2_channels, 3, s.mid.height,
                                        s.out.height, bias));
        if (s.projection && options.count_projections) {
          r.per_layer.push_back(conv_cost(i, "residual.projection",
                                          s.in.channels, b.conv2_channels, 1,
                                          s.in.height, s.out.height, bias));
        }
        break;
      }
      default:
        break;
    }
  }
  for (const auto& c : r.per_layer) {
    r.total_macs += c.macs;
    r.total_params += c.params;
  }
  return r;
}

double ops_reduction(const CostReport& baseline, const CostReport& pruned) {
  if (baseline.total_macs <= 0 || pruned.total_macs <= 0) {
    throw ArchError("OPS reduction needs nonzero MAC totals");
  }
  return static_cast<double>(baseline.total_macs) /
         static_cast<double>(pruned.total_macs);
}

double params_reduction(const CostReport& baseline, const CostReport& pruned) {
  if (baseline.total_params <= 0 || pruned.total_params <= 0) {
    throw ArchError("parameter reduction needs nonzero parameter totals");
  }
  return static_cast<double>(baseline.total_params) /
         static_cast<double>(pruned.total_params);
}

CostReport compare(const CostReport& baseline, const CostReport& pruned) {
  CostReport out = pruned;
  out.ops_reduction = ops_reduction(baseline, pruned);
  out.params_reduction = params_reduction(baseline, pruned);
  return out;
}

double training_complexity(std::span<const ComplexityStage> stages) {
  return checked_stage_sum(stages);
}

double training_memory_complexity(std::span<const ComplexityStage> stages) {
  return checked_stage_sum(stages);
}

double iterations_to_epochs(std::int64_t iterations, std::int64_t batch_size,
                            std::int64_t train_size) {
  if (iterations < 0 || batch_size < 1 || train_size < 1) {
    throw ArchError("iterations_to_epochs needs batch and train size >= 1");
  }
  return static_cast<double>(iterations) * static_cast<double>(batch_size) /
         static_cast<double>(train_size);
}

nlohmann::json to_json(const CostReport& report) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& c : report.per_layer) {
    layers.push_back({{"layer_index", c.layer_index},
                      {"part", c.part},
                      {"N", c.N},
                      {"M", c.M},
                      {"k", c.k},
                      {"I", c.I},
                      {"O", c.O},
                      {"macs", c.macs},
                      {"params", c.params}});
  }
  return {{"arch", report.arch_name},
          {"layers", layers},
          {"total_macs", report.total_macs},
          {"total_params", report.total_params},
          {"ops_reduction", report.ops_reduction},
          {"params_reduction", report.params_reduction}};
}

}  // namespace densiprune
