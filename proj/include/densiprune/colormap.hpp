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

// Channel-averaged activation maps for one input image, exported as 8-bit
// PGM images and CSV matrices.

#ifndef DENSIPRUNE_COLORMAP_HPP
#define DENSIPRUNE_COLORMAP_HPP

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "densiprune/network.hpp"

namespace densiprune {

/// Mean over channels of activations[image] ([B,C,H,W]) -> H x W.
Eigen::MatrixXd channel_mean_map(const Tensor<float>& activations,
                                 Index image = 0);

/// Maps [min,max] onto [0,1]. A constant map becomes all zeros.
Eigen::MatrixXd normalize_min_max(const Eigen::MatrixXd& map);

/// Binary P5, maxval 255; values are clamped to [0,1].
void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& unit);
/// One row per line, comma separated, shortest round-trip decimals.
void write_matrix_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& m);

struct ColormapExport {
  std::vector<size_t> layer_indices;
  Index image_index = 0;
  std::vector<Eigen::MatrixXd> matrices;  // normalized, one per layer
};

/// Runs image ([1,C,H,W]) through the model and collects the normalized
/// channel-mean map after each selected conv, relu or residual layer.
ColormapExport compute_colormaps(Network<float>& model,
                                 const Tensor<float>& image,
                                 std::span<const size_t> layer_indices,
                                 Index image_index);

}  // namespace densiprune

#endif  // DENSIPRUNE_COLORMAP_HPP
