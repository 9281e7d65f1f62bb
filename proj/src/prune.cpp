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

#include "densiprune/prune.hpp"

#include <cmath>

#include <fmt/format.h>

#include "densiprune/rng.hpp"

namespace densiprune {

void PruneCriteria::validate() const {
  if (!(rho_tolerance > 0.0) || !(delta_slope_tolerance > 0.0)) {
    throw ConfigError("rho and delta tolerances must be > 0");
  }
  if (rho_window < 2) throw ConfigError("rho_window must be >= 2");
  if (rho_min_epochs < 0 || delta_warmup_epochs < 0 || max_rounds < 0 ||
      final_train_epochs < 0) {
    throw ConfigError("epoch and round counts must be >= 0");
  }
}

std::string_view to_string(AeProfile profile) {
  switch (profile) {
    case AeProfile::decreasing: return "decreasing";
    case AeProfile::flat: return "flat";
    case AeProfile::increasing: return "increasing";
  }
  return "?";
}

bool saturation_reached(const AeHistory& history, const PruneCriteria& c) {
  const auto n = static_cast<int>(history.size());
  if (n < c.rho_min_epochs || n < c.rho_window + 1) return false;
  const auto totals = history.total_series();
  for (int i = n - c.rho_window; i < n; ++i) {
    const auto k = static_cast<size_t>(i);
    if (!(std::abs(totals[k] - totals[k - 1]) < c.rho_tolerance)) return false;
  }
  return true;
}

double least_squares_slope(std::span<const double> x,
                           std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw StateError("slope needs >= 2 paired points");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw StateError("slope undefined for constant x");
  return sxy / sxx;
}

AeProfile classify_profile(const AeHistory& history, const PruneCriteria& c) {
  const auto warmup = static_cast<size_t>(c.delta_warmup_epochs);
  if (history.size() <= warmup + 1) {
    throw StateError(fmt::format("profile needs more than {} epochs, have {}",
                                 warmup + 1, history.size()));
  }
  std::vector<double> x, y;
  for (size_t i = warmup; i < history.size(); ++i) {
    x.push_back(static_cast<double>(history.samples[i].epoch));
    y.push_back(history.samples[i].total_ae);
  }
  const double slope = least_squares_slope(x, y);
  if (slope > c.delta_slope_tolerance) return AeProfile::increasing;
  if (slope < -c.delta_slope_tolerance) return AeProfile::decreasing;
  return AeProfile::flat;
}

PruneStepResult prune_step(const StageRecord& stage, std::uint64_t seed) {
  if (stage.history.empty()) {
    throw StateError("cannot prune a stage with no AE history");
  }
  PruneEvent event;
  event.from_index = stage.network_index;
  event.epoch = stage.first_epoch + stage.epochs_trained;
  event.ae_used = ae_vector_at(stage.history, stage.history.samples.back().epoch);
  event.old_sizes = prunable_sizes(stage.arch);
  ArchSpec next = resize_arch(stage.arch, event.ae_used);
  event.new_sizes = prunable_sizes(next);
  auto model = Network<float>::instantiate(next, seed);
  return {std::move(next), std::move(model), std::move(event)};
}

namespace {

std::uint64_t stage_shuffle_seed(std::uint64_t base, int index,
                                 StageRole role) {
  const auto key = (static_cast<std::uint64_t>(index) << 1) |
                   (role == StageRole::final ? 1u : 0u);
  return derive_seed(base, SeedPurpose::shuffle, key);
}

StageRecord make_record(int index, StageRole role, const ArchSpec& arch,
                        int first_epoch, StageOutcome& outcome,
                        const PruneCriteria& c, const CostReport& baseline) {
  StageRecord r;
  r.network_index = index;
  r.role = role;
  r.arch = arch;
  r.first_epoch = first_epoch;
  r.epochs_trained = static_cast<int>(outcome.history.size());
  r.history = outcome.history;
  r.history.network_index = index;
  r.final_accuracy = outcome.final_accuracy;
  r.saturated = role == StageRole::search && outcome.stopped_early;
  if (r.history.size() > static_cast<size_t>(c.delta_warmup_epochs) + 1) {
    r.profile = classify_profile(r.history, c);
  }
  r.cost = compare(baseline, network_cost(arch));
  return r;
}

}  // namespace

PruneRunResult run_pruning_in_training(const PruneRunConfig& config,
                                       StageTrainer& trainer,
                                       const RunObserver& observer) {
  const PruneCriteria& c = config.criteria;
  c.validate();
  if (config.epochs_budget < 1) throw ConfigError("epochs_budget must be >= 1");

  PruneRunResult result;
  ArchSpec arch = resolve(config.arch);
  const CostReport baseline = network_cost(arch);
  int index = 0;
  int epochs_so_far = 0;
  auto model = Network<float>::instantiate(
      arch, derive_seed(config.seed, SeedPurpose::weight_init, 0));

  for (int round = 0; round < c.max_rounds; ++round) {
    StageRequest req;
    req.network_index = index;
    req.role = StageRole::search;
    req.model = std::move(model);
    req.shuffle_seed = stage_shuffle_seed(config.seed, index, req.role);
    req.max_epochs = config.epochs_budget;
    req.stop = [&c](const AeHistory& h) { return saturation_reached(h, c); };
    StageOutcome outcome = trainer.train(std::move(req));

    StageRecord record = make_record(index, StageRole::search, arch,
                                     epochs_so_far, outcome, c, baseline);
    epochs_so_far += record.epochs_trained;
    result.stages.push_back(record);
    if (observer.on_stage) observer.on_stage(record);

    if (record.profile == AeProfile::increasing) break;

    PruneStepResult step = prune_step(
        record, derive_seed(config.seed, SeedPurpose::weight_init,
                            static_cast<std::uint64_t>(index + 1)));
    result.events.push_back(step.event);
    if (observer.on_prune) observer.on_prune(step.event);
    arch = std::move(step.arch);
    model = std::move(step.model);
    ++index;
  }

  StageRequest req;
  req.network_index = index;
  req.role = StageRole::final;
  req.model = Network<float>::instantiate(
      arch, derive_seed(config.seed, SeedPurpose::final_init,
                        static_cast<std::uint64_t>(index)));
  req.shuffle_seed = stage_shuffle_seed(config.seed, index, req.role);
  req.max_epochs = c.final_train_epochs;
  StageOutcome outcome = trainer.train(std::move(req));
  StageRecord record = make_record(index, StageRole::final, arch, epochs_so_far,
                                   outcome, c, baseline);
  result.stages.push_back(record);
  if (observer.on_stage) observer.on_stage(record);
  result.final_model = std::move(outcome.model);
  return result;
}

nlohmann::json to_json(const PruneEvent& event) {
  return {{"type", "prune"},
          {"from_index", event.from_index},
          {"to_index", event.from_index + 1},
          {"epoch", event.epoch},
          {"ae_used", event.ae_used},
          {"old_sizes", event.old_sizes},
          {"new_sizes", event.new_sizes}};
}

nlohmann::json to_json(const StageRecord& stage) {
  const auto totals = stage.history.total_series();
  return {{"type", "stage"},
          {"network_index", stage.network_index},
          {"role", stage.role == StageRole::final ? "final" : "search"},
          {"arch", stage.arch.name},
          {"sizes", prunable_sizes(stage.arch)},
          {"first_epoch", stage.first_epoch},
          {"epochs_trained", stage.epochs_trained},
          {"saturated", stage.saturated},
          {"final_accuracy", stage.final_accuracy},
          {"final_total_ae", totals.empty() ? 0.0 : totals.back()},
          {"profile", stage.profile ? std::string(to_string(*stage.profile))
                                    : std::string("n/a")},
          {"params", stage.cost.total_params},
          {"macs", stage.cost.total_macs},
          {"params_reduction", stage.cost.params_reduction},
          {"ops_reduction", stage.cost.ops_reduction}};
}

}  // namespace densiprune
