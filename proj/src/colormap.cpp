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

#include "densiprune/colormap.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/format.h>

namespace densiprune {

Eigen::MatrixXd channel_mean_map(const Tensor<float>& a, Index image) {
  if (a.rank() != 4) {
    throw ShapeError("colormap needs a [B,C,H,W] tensor, got " +
                     shape_string(a.shape()));
  }
  if (image < 0 || image >= a.dim(0)) {
    throw ShapeError(fmt::format("image {} out of range for batch of {}",
                                 image, a.dim(0)));
  }
  const Index c = a.dim(1), h = a.dim(2), w = a.dim(3);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(h, w);
  const float* base = a.data() + image * c * h * w;
  for (Index ch = 0; ch < c; ++ch) {
    for (Index y = 0; y < h; ++y) {
      for (Index x = 0; x < w; ++x) {
        out(y, x) += static_cast<double>(base[(ch * h + y) * w + x]);
      }
    }
  }
  return out / static_cast<double>(c);
}

Eigen::MatrixXd normalize_min_max(const Eigen::MatrixXd& map) {
  if (map.size() == 0) return map;
  const double lo = map.minCoeff();
  const double hi = map.maxCoeff();
  if (!(hi > lo)) return Eigen::MatrixXd::Zero(map.rows(), map.cols());
  return (map.array() - lo) / (hi - lo);
}

void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& unit) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << "P5\n" << unit.cols() << ' ' << unit.rows() << "\n255\n";
  for (Index y = 0; y < unit.rows(); ++y) {
    for (Index x = 0; x < unit.cols(); ++x) {
      const double v = std::clamp(unit(y, x), 0.0, 1.0);
      f.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
}

void write_matrix_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& m) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  for (Index y = 0; y < m.rows(); ++y) {
    for (Index x = 0; x < m.cols(); ++x) {
      f << (x ? "," : "") << fmt::format("{}", m(y, x));
    }
    f << '\n';
  }
}

ColormapExport compute_colormaps(Network<float>& model,
                                 const Tensor<float>& image,
                                 std::span<const size_t> layer_indices,
                                 Index image_index) {
  const auto& layers = model.arch().layers;
  for (size_t i : layer_indices) {
    if (i >= layers.size()) {
      throw ArchError(fmt::format("layer index {} out of range (arch has {})",
                                  i, layers.size()));
    }
    const LayerKind k = layers[i].kind;
    if (k != LayerKind::conv && k != LayerKind::relu &&
        k != LayerKind::residual_block) {
      throw ArchError(fmt::format("layer {} is {}, not a conv/relu output", i,
                                  to_string(k)));
    }
  }
  std::map<size_t, Tensor<float>> captured;
  ForwardHooks<float> hooks;
  hooks.capture_layers = layer_indices;
  hooks.captured = &captured;
  model.forward(image, hooks, false);

  ColormapExport out;
  out.layer_indices.assign(layer_indices.begin(), layer_indices.end());
  out.image_index = image_index;
  for (size_t i : layer_indices) {
    out.matrices.push_back(normalize_min_max(channel_mean_map(captured.at(i))));
  }
  return out;
}

}  // namespace densiprune
