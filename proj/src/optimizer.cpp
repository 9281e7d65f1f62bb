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

#include "densiprune/optimizer.hpp"

#include <string>

namespace densiprune {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) {
    throw ConfigError("learning rate must be > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) {
    throw ConfigError("weight decay must be >= 0");
  }
  for (size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i].epoch <= schedule[i - 1].epoch) {
      throw ConfigError("learning-rate schedule epochs must be strictly "
                        "increasing");
    }
  }
}

double OptimizerConfig::learning_rate_at(int epoch) const {
  double multiplier = 1.0;
  for (const auto& step : schedule) {
    if (epoch >= step.epoch) multiplier = step.multiplier;
  }
  return learning_rate * multiplier;
}

std::vector<LrStep> default_schedule(int epoch_budget) {
  if (epoch_budget < 4) return {};
  return {{epoch_budget / 2, 0.1}, {(3 * epoch_budget) / 4, 0.01}};
}

}  // namespace densiprune
