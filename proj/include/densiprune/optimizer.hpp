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

#ifndef DENSIPRUNE_OPTIMIZER_HPP
#define DENSIPRUNE_OPTIMIZER_HPP

#include <vector>

#include "densiprune/layers.hpp"

namespace densiprune {

/// From `epoch` onward the learning rate is base * multiplier.
struct LrStep {
  int epoch = 0;
  double multiplier = 1.0;
};

struct OptimizerConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<LrStep> schedule;

  /// Throws ConfigError on lr <= 0, momentum outside [0,1), negative decay
  /// or a schedule whose epochs are not strictly increasing.
  void validate() const;

  double learning_rate_at(int epoch) const;
};

/// x0.1 at 50% and x0.01 at 75% of `epoch_budget`.
std::vector<LrStep> default_schedule(int epoch_budget);

/// v <- momentum*v + grad + decay*w;  w <- w - lr(epoch)*v;  grads cleared.
template <typename Scalar>
void sgd_step(LayerParams<Scalar>& params, const OptimizerConfig& opt,
              int epoch) {
  const auto lr = static_cast<Scalar>(opt.learning_rate_at(epoch));
  const auto momentum = static_cast<Scalar>(opt.momentum);
  const auto decay = static_cast<Scalar>(opt.weight_decay);
  auto update = [&](Tensor<Scalar>& w, Tensor<Scalar>& g, Tensor<Scalar>& v) {
    v.values() = momentum * v.values() + g.values() + decay * w.values();
    w.values() -= lr * v.values();
    g.values().setZero();
  };
  update(params.weights, params.grad_weights, params.velocity_weights);
  if (params.has_bias()) {
    update(params.bias, params.grad_bias, params.velocity_bias);
  }
}

}  // namespace densiprune

#endif  // DENSIPRUNE_OPTIMIZER_HPP
