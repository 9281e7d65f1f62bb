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

#include "densiprune/ae.hpp"

#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "densiprune/errors.hpp"

namespace densiprune {

AeAccumulator::AeAccumulator(size_t layers, int epoch)
    : nonzero_(layers, 0), total_(layers, 0), epoch_(epoch) {}

void AeAccumulator::record(size_t layer, std::uint64_t nonzero,
                           std::uint64_t total) {
  if (layer >= nonzero_.size()) {
    throw StateError(fmt::format("AE layer {} out of range ({} measured)",
                                 layer, nonzero_.size()));
  }
  if (total == 0 || nonzero > total) {
    throw StateError(fmt::format("invalid AE record: nonzero={} total={}",
                                 nonzero, total));
  }
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  if (total_[layer] > kMax - total) {
    throw NumericError("AE counter overflow");
  }
  nonzero_[layer] += nonzero;
  total_[layer] += total;
}

void AeAccumulator::merge(const AeAccumulator& other) {
  if (other.layer_count() != layer_count()) {
    throw StateError("cannot merge AE accumulators of different widths");
  }
  for (size_t l = 0; l < layer_count(); ++l) {
    if (other.total_[l] > 0) record(l, other.nonzero_[l], other.total_[l]);
  }
}

AeSample AeAccumulator::finalize_epoch(double accuracy) {
  AeSample s;
  s.epoch = epoch_;
  s.accuracy = accuracy;
  s.layer_ae.resize(layer_count());
  std::uint64_t sum_nonzero = 0, sum_total = 0;
  for (size_t l = 0; l < layer_count(); ++l) {
    if (total_[l] == 0) {
      throw StateError(fmt::format("AE layer {} recorded no activations", l));
    }
    s.layer_ae[l] =
        static_cast<double>(nonzero_[l]) / static_cast<double>(total_[l]);
    sum_nonzero += nonzero_[l];
    sum_total += total_[l];
  }
  s.total_ae = sum_total ? static_cast<double>(sum_nonzero) /
                               static_cast<double>(sum_total)
                         : 0.0;
  std::fill(nonzero_.begin(), nonzero_.end(), 0);
  std::fill(total_.begin(), total_.end(), 0);
  ++epoch_;
  return s;
}

void AeHistory::append(AeSample sample) {
  if (!samples.empty() && sample.epoch <= samples.back().epoch) {
    throw StateError(fmt::format("AE history epochs must increase ({} after "
                                 "{})", sample.epoch, samples.back().epoch));
  }
  samples.push_back(std::move(sample));
}

std::vector<double> AeHistory::total_series() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.total_ae);
  return out;
}

std::vector<double> ae_vector_at(const AeHistory& history, int epoch) {
  for (const auto& s : history.samples) {
    if (s.epoch == epoch) return s.layer_ae;
  }
  throw StateError(fmt::format("epoch {} not in AE history", epoch));
}

void write_ae_csv(std::ostream& out, const AeHistory& history) {
  const size_t layers =
      history.empty() ? 0 : history.samples.front().layer_ae.size();
  out << "epoch,accuracy,total_ae";
  for (size_t l = 0; l < layers; ++l) out << ",ae_L" << l;
  out << '\n';
  for (const auto& s : history.samples) {
    out << fmt::format("{},{},{}", s.epoch, s.accuracy, s.total_ae);
    for (double v : s.layer_ae) out << fmt::format(",{}", v);
    out << '\n';
  }
}

std::string ae_csv(const AeHistory& history) {
  std::ostringstream ss;
  write_ae_csv(ss, history);
  return ss.str();
}

}  // namespace densiprune
