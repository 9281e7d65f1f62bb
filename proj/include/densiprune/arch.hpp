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

// Declarative network architectures. An ArchSpec is an immutable value; the
// pruning loop produces new specs through resize_arch() rather than mutating
// a live model.

#ifndef DENSIPRUNE_ARCH_HPP
#define DENSIPRUNE_ARCH_HPP

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "densiprune/tensor.hpp"

namespace densiprune {

enum class LayerKind { conv, relu, maxpool, avgpool, fc, residual_block };

std::string_view to_string(LayerKind kind);

/// Two 3x3 convs with a shortcut. conv1 carries the stride; the shortcut is a
/// 1x1 projection conv whenever input width != conv2 width or stride != 1.
struct ResidualBlockSpec {
  Index conv1_channels = 0;
  Index conv2_channels = 0;
  Index stride = 1;
  bool projection = false;  // derived, see resolve()

  bool operator==(const ResidualBlockSpec&) const = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  Index out_channels = 0;  // conv, fc
  Index kernel = 0;        // conv and pools; 0 on avgpool = global
  Index stride = 1;
  Index padding = 0;
  bool prunable = false;    // conv, or residual_block (both inner convs)
  bool measure_ae = false;  // derived: relu right after a prunable conv
  ResidualBlockSpec block;  // residual_block only

  static LayerSpec conv(Index channels, Index kernel = 3, Index stride = 1,
                        Index padding = 1, bool prunable = true);
  static LayerSpec relu();
  static LayerSpec maxpool(Index window = 2, Index stride = 2);
  static LayerSpec global_avgpool();
  static LayerSpec fc(Index out_features);
  static LayerSpec residual(Index conv1_channels, Index conv2_channels,
                            Index stride = 1);

  bool operator==(const LayerSpec&) const = default;
};

/// (channels, height, width) of one sample's feature map.
struct FeatureShape {
  Index channels = 0;
  Index height = 0;
  Index width = 0;

  bool operator==(const FeatureShape&) const = default;
};

struct ArchSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  FeatureShape input_shape;
  Index num_classes = 0;

  bool operator==(const ArchSpec&) const = default;
};

struct LayerShapes {
  FeatureShape in;
  FeatureShape out;
  FeatureShape mid;  // residual_block: output of conv1
  bool projection = false;
};

/// Per-layer in/out shapes. Channels are inherited from the previous layer,
/// pooling keeps them. Throws ArchError on spatial collapse, a misplaced
/// layer, or a head whose width differs from num_classes.
std::vector<LayerShapes> propagate_shapes(const ArchSpec& arch);

/// Recomputes the derived flags (measure_ae, residual projection) and
/// validates the result.
ArchSpec resolve(ArchSpec arch);

/// Output-channel counts of the prunable convs, in forward order. A residual
/// block contributes two entries (conv1, conv2).
std::vector<Index> prunable_sizes(const ArchSpec& arch);

/// Replaces the prunable sizes wholesale.
ArchSpec with_prunable_sizes(const ArchSpec& arch, std::span<const Index> sizes);

/// new_size = max(1, round(ae * old_size)) per prunable conv.
ArchSpec resize_arch(const ArchSpec& arch, std::span<const double> ae);

/// vgg19, resnet18 (channel lists of the standard CIFAR variants), and the
/// desk-scale vgg-lite / resnet-lite.
ArchSpec builtin_arch(std::string_view name, FeatureShape input_shape,
                      Index num_classes);

std::string to_text(const ArchSpec& arch);
ArchSpec parse_arch(std::string_view text);
ArchSpec load_arch_file(const std::filesystem::path& path);

}  // namespace densiprune

#endif  // DENSIPRUNE_ARCH_HPP
