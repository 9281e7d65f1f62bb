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

#ifndef DENSIPRUNE_DATA_HPP
#define DENSIPRUNE_DATA_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "densiprune/tensor.hpp"

namespace densiprune {

/// Per-channel affine normalization x' = (x - mean) / std on [0,1] pixels.
struct Normalization {
  std::vector<float> mean;
  std::vector<float> stddev;

  static Normalization grayscale() { return {{0.1307f}, {0.3081f}}; }
  static Normalization cifar() {
    return {{0.4914f, 0.4822f, 0.4465f}, {0.2470f, 0.2435f, 0.2616f}};
  }
};

struct Dataset {
  Tensor<float> images;  // [count, channels, height, width], normalized
  std::vector<int> labels;
  int num_classes = 0;
  std::string name;

  Index count() const { return static_cast<Index>(labels.size()); }
};

/// MNIST-style IDX pair (magic 0x803 images, 0x801 labels). Pixels are scaled
/// to [0,1] and then normalized.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path,
                 int num_classes = 10,
                 const Normalization& norm = Normalization::grayscale());

/// CIFAR binary records: 1 label byte + 3x1024 channel-major pixel bytes.
Dataset load_cifar_binary(std::span<const std::filesystem::path> paths,
                          int num_classes = 10,
                          const Normalization& norm = Normalization::cifar());

/// Class-balanced subset with exactly n_per_class samples of every class,
/// chosen by a seeded shuffle. Output keeps the source order of the chosen
/// samples.
Dataset subset(const Dataset& d, Index n_per_class, std::uint64_t seed);

void normalize_in_place(Tensor<float>& images, const Normalization& norm);
void denormalize_in_place(Tensor<float>& images, const Normalization& norm);

struct BatchPlan {
  Index batch_size = 128;
  std::vector<Index> order;  // permutation of [0, count)
  std::uint64_t epoch_seed = 0;

  /// Seeded Fisher-Yates permutation; identical seed -> identical order.
  static BatchPlan shuffled(Index count, Index batch_size,
                            std::uint64_t epoch_seed);
  static BatchPlan sequential(Index count, Index batch_size);
};

struct Batch {
  Tensor<float> images;
  std::vector<int> labels;
  std::vector<Index> indices;
};

/// Lazy view over ceil(count / batch_size) batches in plan order; the last
/// batch may be short.
class BatchSequence {
 public:
  BatchSequence(const Dataset& d, BatchPlan plan);

  Index size() const { return batches_; }
  Batch operator[](Index i) const;

 private:
  const Dataset* data_;
  BatchPlan plan_;
  Index batches_ = 0;
};

BatchSequence batches(const Dataset& d, BatchPlan plan);

}  // namespace densiprune

#endif  // DENSIPRUNE_DATA_HPP
