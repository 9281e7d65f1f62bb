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

#ifndef DENSIPRUNE_TRAIN_HPP
#define DENSIPRUNE_TRAIN_HPP

#include <functional>

#include "densiprune/data.hpp"
#include "densiprune/network.hpp"
#include "densiprune/optimizer.hpp"
#include "densiprune/prune.hpp"

namespace densiprune {

struct EpochStats {
  double mean_loss = 0.0;
  Index samples = 0;
};

/// One pass over `data` in plan order with an SGD step per batch. Every
/// measured relu records into `ae`. Throws NumericError on a non-finite loss.
EpochStats train_epoch(Network<float>& model, const Dataset& data,
                       const BatchPlan& plan, const OptimizerConfig& opt,
                       int epoch, AeAccumulator& ae);

/// Top-1 accuracy in [0,1], no caches kept.
double evaluate(Network<float>& model, const Dataset& data, Index batch_size);

struct TrainerSettings {
  OptimizerConfig optimizer;  // empty schedule -> default_schedule(max_epochs)
  Index batch_size = 128;
};

class NetworkStageTrainer : public StageTrainer {
 public:
  using EpochCallback =
      std::function<void(int network_index, StageRole, const AeSample&)>;

  NetworkStageTrainer(const Dataset& train, const Dataset& test,
                      TrainerSettings settings);

  StageOutcome train(StageRequest request) override;

  void set_epoch_callback(EpochCallback cb) { on_epoch_ = std::move(cb); }

  /// The optimizer actually used for a stage of `max_epochs` epochs.
  OptimizerConfig stage_optimizer(int max_epochs) const;

 private:
  const Dataset* train_;
  const Dataset* test_;
  TrainerSettings settings_;
  EpochCallback on_epoch_;
};

}  // namespace densiprune

#endif  // DENSIPRUNE_TRAIN_HPP
