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

// Published channel lists, reductions and training-complexity figures for
// VGG-19 and ResNet18, with a recomputation of every cell that follows from
// them.

#ifndef DENSIPRUNE_REFERENCE_TABLES_HPP
#define DENSIPRUNE_REFERENCE_TABLES_HPP

#include <string>
#include <vector>

#include "densiprune/arch.hpp"
#include "densiprune/cost.hpp"

namespace densiprune {

struct PublishedNet {
  std::string model;    // builtin arch name: vgg19 or resnet18
  std::string dataset;  // cifar10, cifar100, tinyimagenet
  int index = 0;        // net0, net1, ...
  std::vector<Index> sizes;
  double accuracy = 0.0;  // percent
  double params_reduction = 1.0;
  double ops_reduction = 1.0;
  int epochs_to_rho = 0;  // 0 where none was reported
  bool selected = false;  // the run's chosen final network
};

const std::vector<PublishedNet>& published_nets();

/// Input shape and class count of a dataset name.
FeatureShape dataset_input(const std::string& dataset);
Index dataset_classes(const std::string& dataset);

ArchSpec published_arch(const PublishedNet& net);

struct TableCell {
  std::string table;  // "table1", "table2", "table3", "table4"
  std::string cell;
  double recomputed = 0.0;
  double published = 0.0;
  double tolerance = 0.0;  // absolute, or relative when relative is set 
  bool relative = false;
  bool derivable = true;
  bool pass = false;
  std::string note;
  // Reduction cells are plausibility checks; the exit status of the
  // reproduction only follows the complexity cells.
  bool gating = true;
};

/// Every cell, derivable or not. Non-derivable cells carry the published
/// value as recomputed and pass trivially.
std::vector<TableCell> reproduce_tables(const CostOptions& options = {});

}  // namespace densiprune

#endif  // DENSIPRUNE_REFERENCE_TABLES_HPP
