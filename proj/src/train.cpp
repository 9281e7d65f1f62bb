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

#include "densiprune/train.hpp"

#include <cmath>

#include <fmt/format.h>

#include "densiprune/rng.hpp"

namespace densiprune {

EpochStats train_epoch(Network<float>& model, const Dataset& data,
                       const BatchPlan& plan, const OptimizerConfig& opt,
                       int epoch, AeAccumulator& ae) {
  const auto seq = batches(data, plan);
  EpochStats stats;
  double loss_sum = 0.0;
  ForwardHooks<float> hooks;
  hooks.ae = &ae;
  for (Index i = 0; i < seq.size(); ++i) {
    const Batch batch = seq[i];
    const auto logits = model.forward(batch.images, hooks);
    const auto xent = softmax_xent(logits, std::span<const int>(batch.labels));
    if (!std::isfinite(xent.loss)) {
      throw NumericError(fmt::format("non-finite loss at epoch {} batch {}",
                                     epoch, i));
    }
    model.backward(xent.logit_grad);
    model.sgd_step(opt, epoch);
    const auto n = static_cast<Index>(batch.labels.size());
    loss_sum += xent.loss * static_cast<double>(n);
    stats.samples += n;
  }
  stats.mean_loss = stats.samples ? loss_sum / static_cast<double>(stats.samples)
                                  : 0.0;
  return stats;
}

double evaluate(Network<float>& model, const Dataset& data, Index batch_size) {
  const auto seq = batches(data, BatchPlan::sequential(data.count(), batch_size));
  Index correct = 0;
  for (Index i = 0; i < seq.size(); ++i) {
    const Batch batch = seq[i];
    const auto predicted = argmax_rows(model.forward(batch.images, {}, false));
    for (size_t k = 0; k < predicted.size(); ++k) {
      if (predicted[k] == batch.labels[k]) ++correct;
    }
  }
  return data.count() ? static_cast<double>(correct) /
                            static_cast<double>(data.count())
                      : 0.0;
}

NetworkStageTrainer::NetworkStageTrainer(const Dataset& train,
                                         const Dataset& test,
                                         TrainerSettings settings)
    : train_(&train), test_(&test), settings_(std::move(settings)) {
  settings_.optimizer.validate();
  if (settings_.batch_size < 1) throw ConfigError("batch size must be >= 1");
}

OptimizerConfig NetworkStageTrainer::stage_optimizer(int max_epochs) const {
  OptimizerConfig opt = settings_.optimizer;
  if (opt.schedule.empty()) opt.schedule = default_schedule(max_epochs);
  return opt;
}

StageOutcome NetworkStageTrainer::train(StageRequest request) {
  StageOutcome out;
  out.model = std::move(request.model);
  out.history.network_index = request.network_index;
  const OptimizerConfig opt = stage_optimizer(request.max_epochs);
  for (int epoch = 0; epoch < request.max_epochs; ++epoch) {
    AeAccumulator ae(out.model.measured_layers(), epoch);
    const auto plan = BatchPlan::shuffled(
        train_->count(), settings_.batch_size,
        derive_seed(request.shuffle_seed, SeedPurpose::shuffle,
                    static_cast<std::uint64_t>(epoch)));
    const EpochStats stats = train_epoch(out.model, *train_, plan, opt, epoch, ae);
    const double accuracy = evaluate(out.model, *test_, settings_.batch_size);
    AeSample sample = ae.finalize_epoch(accuracy);
    sample.train_loss = stats.mean_loss;
    if (on_epoch_) on_epoch_(request.network_index, request.role, sample);
    out.history.append(std::move(sample));
    out.final_accuracy = accuracy;
    if (request.stop && request.stop(out.history)) {
      out.stopped_early = true;
      break;
    }
  }
  return out;
}

}  // namespace densiprune
