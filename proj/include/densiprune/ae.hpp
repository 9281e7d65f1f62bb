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

// Activation density: per measured layer, the fraction of post-ReLU outputs
// strictly greater than zero, accumulated over every training batch of an
// epoch.

#ifndef DENSIPRUNE_AE_HPP
#define DENSIPRUNE_AE_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace densiprune {

struct AeSample {
  int epoch = 0;
  std::vector<double> layer_ae;
  double total_ae = 0.0;  // sum(nonzero) / sum(total), not a mean of ratios
  double accuracy = 0.0;  // held-out accuracy after this epoch
  double train_loss = 0.0;
};

/// Integer counters; record() is associative and commutative, so partial
/// accumulators from parallel workers can be merge()d in any order.
class AeAccumulator {
 public:
  explicit AeAccumulator(size_t layers = 0, int epoch = 0);

  void record(size_t layer, std::uint64_t nonzero, std::uint64_t total);
  void merge(const AeAccumulator& other);

  /// Divides once per layer, then resets the counters and advances the epoch.
  /// Throws if some layer saw no activations.
  AeSample finalize_epoch(double accuracy);

  size_t layer_count() const { return nonzero_.size(); }
  std::uint64_t nonzero(size_t layer) const { return nonzero_.at(layer); }
  std::uint64_t total(size_t layer) const { return total_.at(layer); }
  int epoch() const { return epoch_; }

 private:
  std::vector<std::uint64_t> nonzero_;
  std::vector<std::uint64_t> total_;
  int epoch_ = 0;
};

struct AeHistory {
  std::vector<AeSample> samples;
  int network_index = 0;

  /// Throws unless sample.epoch exceeds the last recorded epoch.
  void append(AeSample sample);
  std::vector<double> total_series() const;
  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

std::vector<double> ae_vector_at(const AeHistory& history, int epoch);

/// `epoch,accuracy,total_ae,ae_L0,...,ae_Ln`, one row per sample.
void write_ae_csv(std::ostream& out, const AeHistory& history);
std::string ae_csv(const AeHistory& history);

}  // namespace densiprune

#endif  // DENSIPRUNE_AE_HPP
