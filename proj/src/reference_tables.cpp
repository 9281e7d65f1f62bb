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

#include "densiprune/reference_tables.hpp"

#include <cmath>

#include <fmt/format.h>

namespace densiprune {

namespace {

const std::vector<Index> kResNet0 = {64,  64,  64,  64,  64,  128, 128, 128, 128,
                                     256, 256, 256, 256, 512, 512, 512, 512};
const std::vector<Index> kVgg0 = {64,  64,  128, 128, 256, 256, 256, 256,
                                  512, 512, 512, 512, 512, 512, 512, 512};

// Published complexity ratios carry two decimals.
constexpr double kComplexityTol = 0.15;
constexpr double kRatioTol = 0.01;
constexpr double kReductionTol = 0.15;  // relative

const PublishedNet* find(const std::string& model, const std::string& dataset,
                         int index) {
  for (const auto& n : published_nets()) {
    if (n.model == model && n.dataset == dataset && n.index == index) return &n;
  }
  throw ConfigError(fmt::format("no published net {}/{}/net{}", model, dataset,
                                index));
}

TableCell absolute_cell(std::string table, std::string cell, double got,
                        double want, double tol, std::string note = {}) {
  TableCell c{std::move(table), std::move(cell), got, want, tol, false, true,
              std::abs(got - want) <= tol, std::move(note), true};
  return c;
}

TableCell constant_cell(std::string table, std::string cell, double value,
                        std::string note) {
  return {std::move(table), std::move(cell), value, value, 0.0, false, false,
          true, std::move(note), true};
}

}  // namespace

const std::vector<PublishedNet>& published_nets() {
  static const std::vector<PublishedNet> nets = {
      {"resnet18", "cifar10", 0, kResNet0, 97.0, 1.0, 1.0, 100, false},
      {"resnet18", "cifar10", 1,
       {34, 29, 41, 25, 33, 58, 78, 27, 65, 71, 83, 46, 69, 120, 191, 219, 288},
       97.0, 7.3, 6.0, 70, false},
      {"resnet18", "cifar10", 2,
       {21, 16, 30, 10, 22, 24, 47, 9, 39, 26, 48, 12, 39, 41, 85, 63, 188},
       95.0, 41.2, 23.2, 70, true},
      {"resnet18", "cifar10", 3,
       {14, 9, 21, 5, 15, 13, 32, 5, 26, 13, 34, 5, 25, 21, 45, 12, 142},
       91.0, 199.3, 67.1, 0, false},
      {"vgg19", "cifar10", 0, kVgg0, 97.0, 1.0, 1.0, 100, false},
      {"vgg19", "cifar10", 1,
       {18, 23, 47, 25, 54, 51, 62, 61, 197, 258, 378, 322, 402, 383, 259, 134},
       94.0, 3.1, 5.6, 70, true},
      {"vgg19", "cifar10", 2,
       {10, 9, 30, 11, 21, 31, 22, 21, 62, 70, 113, 141, 256, 299, 194, 71},
       93.0, 10.3, 27.4, 0, false},
      {"resnet18", "cifar100", 0, kResNet0, 81.0, 1.0, 1.0, 25, false},
      {"resnet18", "cifar100", 1,
       {39, 31, 49, 24, 44, 54, 90, 36, 84, 88, 155, 65, 136, 130, 231, 105, 300},
       79.0, 7.6, 5.1, 0, true},
      {"vgg19", "cifar100", 0, kVgg0, 76.0, 1.0, 1.0, 25, false},
      {"vgg19", "cifar100", 1,
       {34, 23, 51, 30, 63, 63, 73, 82, 210, 285, 333, 357, 317, 259, 181, 106},
       73.0, 3.9, 5.3, 0, true},
      {"resnet18", "tinyimagenet", 0, kResNet0, 51.54, 1.0, 1.0, 25, false},
      {"resnet18", "tinyimagenet", 1,
       {31, 21, 47, 27, 48, 62, 99, 58, 94, 85, 161, 69, 133, 93, 152, 56, 247},
       50.51, 10.6, 4.7, 0, true},
  };
  return nets;
}

FeatureShape dataset_input(const std::string& dataset) {
  if (dataset == "tinyimagenet") return {3, 64, 64};
  if (dataset == "cifar10" || dataset == "cifar100") return {3, 32, 32};
  throw ConfigError("unknown dataset '" + dataset + "'");
}

Index dataset_classes(const std::string& dataset) {
  if (dataset == "tinyimagenet") return 200;
  if (dataset == "cifar100") return 100;
  if (dataset == "cifar10") return 10;
  throw ConfigError("unknown dataset '" + dataset + "'");
}

ArchSpec published_arch(const PublishedNet& net) {
  const ArchSpec base = builtin_arch(net.model, dataset_input(net.dataset),
                                     dataset_classes(net.dataset));
  ArchSpec a = with_prunable_sizes(base, net.sizes);
  a.name = fmt::format("{}-{}-net{}", net.model, net.dataset, net.index);
  return a;
}

std::vector<TableCell> reproduce_tables(const CostOptions& options) {
  std::vector<TableCell> cells;

  // Reductions of every pruned list against its own net0.
  CostOptions other = options;
  other.count_projections = !options.count_projections;
  for (const auto& n : published_nets()) {
    if (n.index == 0) continue;
    const ArchSpec base_arch = published_arch(*find(n.model, n.dataset, 0));
    const ArchSpec pruned_arch = published_arch(n);
    const auto base = network_cost(base_arch, options);
    const auto pruned = network_cost(pruned_arch, options);
    const auto alt_base = network_cost(base_arch, other);
    const auto alt_pruned = network_cost(pruned_arch, other);
    const std::string name = fmt::format("{} {} net{}", n.model, n.dataset,
                                         n.index);
    for (const bool ops : {false, true}) {
      const double got =
          ops ? ops_reduction(base, pruned) : params_reduction(base, pruned);
      const double alt = ops ? ops_reduction(alt_base, alt_pruned)
                             : params_reduction(alt_base, alt_pruned);
      const double want = ops ? n.ops_reduction : n.params_reduction;
      std::string note;
      if (n.model == "resnet18") {
        note = fmt::format("{} projection convs: {:.3f}",
                           other.count_projections ? "with" : "without", alt);
      }
      TableCell c{"table1",
                  name + (ops ? " ops reduction" : " params reduction"),
                  got,
                  want,
                  kReductionTol,
                  true,
                  true,
                  std::abs(got - want) <= kReductionTol * want,
                  std::move(note),
                  false};
      cells.push_back(std::move(c));
    }
  }

  // Training complexity: sum of epochs / OPS reduction over the stages of
  // each run.
  struct Chain {
    std::string cell;
    std::vector<ComplexityStage> stages;
    double published;
    double published_ratio;
    double baseline_epochs;
    std::string note;
  };
  const std::vector<Chain> chains = {
      {"resnet18 cifar10 net0", {{1.0, 210}}, 210.0, 1.0, 210, {}},
      {"resnet18 cifar10 net1", {{1.0, 100}, {6.0, 210}}, 135.0, 0.64, 210, {}},
      {"resnet18 cifar10 net2",
       {{1.0, 100}, {6.0, 70}, {23.2, 210}}, 120.8, 0.58, 210, {}},
      {"resnet18 cifar100 net0", {{1.0, 210}}, 210.0, 1.0, 210, {}},
      {"resnet18 cifar100 net1", {{1.0, 25}, {5.1, 210}}, 66.2, 0.32, 210, {}},
      {"resnet18 tinyimagenet net0", {{1.0, 60}}, 60.0, 1.0, 60, {}},
      {"resnet18 tinyimagenet net1", {{1.0, 25}, {4.7, 60}}, 37.7, 0.62, 60, {}},
      {"vgg19 cifar10 net0", {{1.0, 210}}, 210.0, 1.0, 210, {}},
      {"vgg19 cifar10 net1",
       {{1.0, 100}, {5.6, 70}, {27.4, 210}},
       120.2,
       0.57,
       210,
       "matches the three-stage chain through net2's reduction; the two-stage "
       "chain 100 + 210/5.6 gives 137.5"},
      {"vgg19 cifar100 net0", {{1.0, 210}}, 210.0, 1.0, 210, {}},
      {"vgg19 cifar100 net1", {{1.0, 25}, {5.3, 210}}, 64.6, 0.31, 210, {}},
  };
  for (const auto& ch : chains) {
    const double got = training_complexity(ch.stages);
    cells.push_back(absolute_cell("table3", ch.cell, got, ch.published,
                                  kComplexityTol, ch.note));
    cells.push_back(absolute_cell("table3", ch.cell + " ratio",
                                  got / ch.baseline_epochs, ch.published_ratio,
                                  kRatioTol));
  }

  // VGG-19 CIFAR-100 comparison with other pruning methods.
  {
    const std::vector<ComplexityStage> liu = {{1.0, 160}, {1.6, 160}};
    cells.push_back(absolute_cell("table2", "liu et al. training complexity",
                                  training_complexity(liu), 260.0,
                                  kComplexityTol));
    const std::vector<ComplexityStage> ours = {{1.0, 25}, {5.3, 210}};
    cells.push_back(absolute_cell("table2", "ours training complexity",
                                  training_complexity(ours), 64.6,
                                  kComplexityTol));
    cells.push_back(constant_cell("table2", "garg et al. training complexity",
                                  206.6,
                                  "published constant, not derivable: stage "
                                  "epochs are not reported"));
  }

  // Training memory complexity. None of the published values follow
  // from the parameter-reduction sum, so all are shown as constants with the
  // formula value alongside.
  {
    const std::vector<ComplexityStage> resnet = {{1.0, 100}, {7.3, 70}, {41.2, 210}};
    const std::vector<ComplexityStage> vgg = {{1.0, 100}, {3.1, 70}, {10.3, 210}};
    cells.push_back(constant_cell(
        "table4", "resnet18 ours memory complexity", 120.8,
        fmt::format("published constant, not derivable: the parameter-reduction "
                    "sum gives {:.2f}; 120.8 equals the OPS-based value",
                    training_memory_complexity(resnet))));
    cells.push_back(constant_cell(
        "table4", "vgg19 ours memory complexity", 129.4,
        fmt::format("published constant, not derivable: the parameter-reduction "
                    "sum gives {:.2f}",
                    training_memory_complexity(vgg))));
    cells.push_back(constant_cell(
        "table4", "resnet18 lth memory complexity", 206.45,
        "published constant, not derivable from the stated iteration schedule"));
    cells.push_back(constant_cell(
        "table4", "vgg19 lth memory complexity", 105.1,
        "published constant, not derivable from the stated iteration schedule"));
  }
  return cells;
}

}  // namespace densiprune
