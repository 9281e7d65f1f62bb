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

// Pruning in training. Each network trains until its total activation
// density saturates, every prunable conv is then resized by its own density,
// and the smaller network restarts from fresh random weights. The loop ends
// when a network's density profile trends upward or the round budget is
// spent; the selected network is finally retrained from scratch.

#ifndef DENSIPRUNE_PRUNE_HPP
#define DENSIPRUNE_PRUNE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "densiprune/ae.hpp"
#include "densiprune/arch.hpp"
#include "densiprune/cost.hpp"
#include "densiprune/network.hpp"

namespace densiprune {

struct PruneCriteria {
  double rho_tolerance = 0.001;  // max |delta total AE| between epochs
  int rho_window = 2;            // consecutive differences that must be small
  int rho_min_epochs = 10;
  double delta_slope_tolerance = 1e-4;  // per epoch, on total AE
  int delta_warmup_epochs = 5;
  int max_rounds = 3;
  int final_train_epochs = 210;

  void validate() const;
};

enum class AeProfile { decreasing, flat, increasing };

std::string_view to_string(AeProfile profile);

/// True once the history has at least rho_min_epochs samples and the last
/// rho_window absolute differences of total AE are all < rho_tolerance.
bool saturation_reached(const AeHistory& history, const PruneCriteria& c);

/// Sign of the least-squares slope of total AE against epoch, ignoring the
/// first delta_warmup_epochs samples. Needs > warmup + 1 samples.
AeProfile classify_profile(const AeHistory& history, const PruneCriteria& c);

/// Ordinary least-squares slope of y against x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

enum class StageRole { search, final };

struct StageRecord {
  int network_index = 0;
  StageRole role = StageRole::search;
  ArchSpec arch;
  int epochs_trained = 0;
  int first_epoch = 0;  // cumulative epochs before this stage
  AeHistory history;
  double final_accuracy = 0.0;
  std::optional<AeProfile> profile;
  bool saturated = false;  // false: stopped by the epoch budget instead
  CostReport cost;         // reductions relative to net0
};

struct PruneEvent {
  int from_index = 0;
  int epoch = 0;  // cumulative training epochs when the prune happened
  std::vector<double> ae_used;
  std::vector<Index> old_sizes;
  std::vector<Index> new_sizes;
};

struct PruneStepResult {
  ArchSpec arch;
  Network<float> model;
  PruneEvent event;
};

/// Resizes stage.arch by the layer densities of the stage's last epoch and
/// instantiates the result from `seed`. No weights are carried over.
PruneStepResult prune_step(const StageRecord& stage, std::uint64_t seed);

struct StageRequest {
  int network_index = 0;
  StageRole role = StageRole::search;
  Network<float> model;  // freshly initialized
  std::uint64_t shuffle_seed = 0;
  int max_epochs = 0;
  std::function<bool(const AeHistory&)> stop;  // checked after every epoch
};

struct StageOutcome {
  AeHistory history;
  double final_accuracy = 0.0;
  Network<float> model;  // trained
  bool stopped_early = false;
};

/// Trains one network. The real implementation is NetworkStageTrainer;
/// tests substitute scripted density curves.
class StageTrainer {
 public:
  virtual ~StageTrainer() = default;
  virtual StageOutcome train(StageRequest request) = 0;
};

struct PruneRunConfig {
  ArchSpec arch;
  PruneCriteria criteria;
  int epochs_budget = 30;  // cap per search stage when rho never fires
  std::uint64_t seed = 1;
};

struct RunObserver {
  std::function<void(const StageRecord&)> on_stage;
  std::function<void(const PruneEvent&)> on_prune;
};

struct PruneRunResult {
  Network<float> final_model;
  std::vector<StageRecord> stages;  // search stages, then the final stage
  std::vector<PruneEvent> events;
};

PruneRunResult run_pruning_in_training(const PruneRunConfig& config,
                                       StageTrainer& trainer,
                                       const RunObserver& observer = {});

nlohmann::json to_json(const PruneEvent& event);
nlohmann::json to_json(const StageRecord& stage);

}  // namespace densiprune

#endif  // DENSIPRUNE_PRUNE_HPP
