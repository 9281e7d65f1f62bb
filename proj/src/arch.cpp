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

#include "densiprune/arch.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "densiprune/layers.hpp"

namespace densiprune {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::avgpool: return "avgpool";
    case LayerKind::fc: return "fc";
    case LayerKind::residual_block: return "residual";
  }
  return "?";
}

LayerSpec LayerSpec::conv(Index channels, Index kernel, Index stride,
                          Index padding, bool prunable) {
  LayerSpec l;
  l.kind = LayerKind::conv;
  l.out_channels = channels;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  l.prunable = prunable;
  return l;
}

LayerSpec LayerSpec::relu() {
  LayerSpec l;
  l.kind = LayerKind::relu;
  return l;
}

LayerSpec LayerSpec::maxpool(Index window, Index stride) {
  LayerSpec l;
  l.kind = LayerKind::maxpool;
  l.kernel = window;
  l.stride = stride;
  return l;
}

LayerSpec LayerSpec::global_avgpool() {
  LayerSpec l;
  l.kind = LayerKind::avgpool;
  l.kernel = 0;
  l.stride = 1;
  return l;
}

LayerSpec LayerSpec::fc(Index out_features) {
  LayerSpec l;
  l.kind = LayerKind::fc;
  l.out_channels = out_features;
  return l;
}

LayerSpec LayerSpec::residual(Index conv1_channels, Index conv2_channels,
                              Index stride) {
  LayerSpec l;
  l.kind = LayerKind::residual_block;
  l.prunable = true;
  l.stride = stride;
  l.block = {conv1_channels, conv2_channels, stride, false};
  return l;
}

namespace {

Index checked_conv_out(Index in, Index k, Index s, Index p, size_t layer) {
  try {
    return conv_output_size(in, k, s, p);
  } catch (const ShapeError& e) {
    throw ArchError(fmt::format("layer {}: {}", layer, e.what()));
  }
}

Index checked_pool_out(Index in, Index window, Index stride, size_t layer) {
  try {
    return pool_output_size(in, window, stride);
  } catch (const ShapeError& e) {
    throw ArchError(fmt::format("layer {}: {}", layer, e.what()));
  }
}

}  // namespace

std::vector<LayerShapes> propagate_shapes(const ArchSpec& arch) {
  if (arch.input_shape.channels < 1 || arch.input_shape.height < 1 ||
      arch.input_shape.width < 1) {
    throw ArchError("architecture '" + arch.name + "' has empty input shape");
  }
  if (arch.layers.empty() || arch.layers.back().kind != LayerKind::fc) {
    throw ArchError("architecture '" + arch.name +
                    "' must end with a fully-connected layer");
  }
  std::vector<LayerShapes> shapes;
  shapes.reserve(arch.layers.size());
  FeatureShape cur = arch.input_shape;
  bool flattened = false;
  for (size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    LayerShapes s;
    s.in = cur;
    if (flattened && l.kind != LayerKind::fc && l.kind != LayerKind::relu) {
      throw ArchError(fmt::format("layer {} ({}) follows a fully-connected "
                                  "layer", i, to_string(l.kind)));
    }
    if (l.prunable && l.kind != LayerKind::conv &&
        l.kind != LayerKind::residual_block) {
      throw ArchError(fmt::format("layer {}: only convs can be prunable", i));
    }
    switch (l.kind) {
      case LayerKind::conv: {
        if (l.out_channels < 1) {
          throw ArchError(fmt::format("layer {}: conv needs >= 1 channel", i));
        }
        s.out = {l.out_channels,
                 checked_conv_out(cur.height, l.kernel, l.stride, l.padding, i),
                 checked_conv_out(cur.width, l.kernel, l.stride, l.padding, i)};
        break;
      }
      case LayerKind::relu:
        s.out = cur;
        break;
      case LayerKind::maxpool:
        s.out = {cur.channels, checked_pool_out(cur.height, l.kernel, l.stride, i),
                 checked_pool_out(cur.width, l.kernel, l.stride, i)};
        break;
      case LayerKind::avgpool: {
        if (l.kernel == 0 && cur.height != cur.width) {
          throw ArchError(fmt::format("layer {}: global pooling needs a "
                                      "square map", i));
        }
        const Index window = l.kernel == 0 ? cur.height : l.kernel;
        const Index stride = l.kernel == 0 ? 1 : l.stride;
        s.out = {cur.channels, checked_pool_out(cur.height, window, stride, i),
                 checked_pool_out(cur.width, window, stride, i)};
        break;
      }
      case LayerKind::fc:
        if (l.out_channels < 1) {
          throw ArchError(fmt::format("layer {}: fc needs >= 1 output", i));
        }
        s.out = {l.out_channels, 1, 1};
        flattened = true;
        break;
      case LayerKind::residual_block: {
        const auto& b = l.block;
        if (b.conv1_channels < 1 || b.conv2_channels < 1) {
          throw ArchError(fmt::format("layer {}: residual convs need >= 1 "
                                      "channel", i));
        }
        const Index h = checked_conv_out(cur.height, 3, b.stride, 1, i);
        const Index w = checked_conv_out(cur.width, 3, b.stride, 1, i);
        s.mid = {b.conv1_channels, h, w};
        s.out = {b.conv2_channels, h, w};
        s.projection = cur.channels != b.conv2_channels || b.stride != 1;
        break;
      }
    }
    cur = s.out;
    shapes.push_back(s);
  }
  if (cur.channels != arch.num_classes) {
    throw ArchError(fmt::format("head width {} does not match {} classes",
                                cur.channels, arch.num_classes));
  }
  return shapes;
}

ArchSpec resolve(ArchSpec arch) {
  const auto shapes = propagate_shapes(arch);
  for (size_t i = 0; i < arch.layers.size(); ++i) {
    LayerSpec& l = arch.layers[i];
    if (l.kind == LayerKind::relu) {
      l.measure_ae = i > 0 && arch.layers[i - 1].kind == LayerKind::conv &&
                     arch.layers[i - 1].prunable;
    } else {
      l.measure_ae = false;
    }
    if (l.kind == LayerKind::residual_block) {
      l.block.projection = shapes[i].projection;
      l.stride = l.block.stride;
    }
    if (l.kind == LayerKind::conv && l.prunable &&
        (i + 1 == arch.layers.size() ||
         arch.layers[i + 1].kind != LayerKind::relu)) {
      throw ArchError(fmt::format("prunable conv at layer {} is not followed "
                                  "by a relu", i));
    }
  }
  return arch;
}

std::vector<Index> prunable_sizes(const ArchSpec& arch) {
  std::vector<Index> sizes;
  for (const auto& l : arch.layers) {
    if (!l.prunable) continue;
    if (l.kind == LayerKind::conv) {
      sizes.push_back(l.out_channels);
    } else if (l.kind == LayerKind::residual_block) {
      sizes.push_back(l.block.conv1_channels);
      sizes.push_back(l.block.conv2_channels);
    }
  }
  return sizes;
}

ArchSpec with_prunable_sizes(const ArchSpec& arch,
                             std::span<const Index> sizes) {
  const size_t expected = prunable_sizes(arch).size();
  if (sizes.size() != expected) {
    throw ArchError(fmt::format("got {} sizes for {} prunable layers",
                                sizes.size(), expected));
  }
  ArchSpec out = arch;
  size_t k = 0;
  for (auto& l : out.layers) {
    if (!l.prunable) continue;
    if (l.kind == LayerKind::conv) {
      l.out_channels = sizes[k++];
    } else if (l.kind == LayerKind::residual_block) {
      l.block.conv1_channels = sizes[k++];
      l.block.conv2_channels = sizes[k++];
    }
  }
  return resolve(std::move(out));
}

ArchSpec resize_arch(const ArchSpec& arch, std::span<const double> ae) {
  const auto old_sizes = prunable_sizes(arch);
  if (ae.size() != old_sizes.size()) {
    throw ArchError(fmt::format("AE vector has {} entries for {} prunable "
                                "layers", ae.size(), old_sizes.size()));
  }
  std::vector<Index> sizes(old_sizes.size());
  for (size_t i = 0; i < ae.size(); ++i) {
    if (!(ae[i] >= 0.0 && ae[i] <= 1.0)) {
      throw ArchError(fmt::format("AE[{}] = {} outside [0, 1]", i, ae[i]));
    }
    const auto scaled =
        static_cast<Index>(std::llround(ae[i] * static_cast<double>(old_sizes[i])));
    sizes[i] = std::max<Index>(1, scaled);
  }
  return with_prunable_sizes(arch, sizes);
}

namespace {

ArchSpec vgg(std::string name, std::initializer_list<Index> plan,
             FeatureShape input, Index classes) {
  // 0 marks a 2x2 max pool.
  ArchSpec a{std::move(name), {}, input, classes};
  for (Index c : plan) {
    if (c == 0) {
      a.layers.push_back(LayerSpec::maxpool(2, 2));
    } else {
      a.layers.push_back(LayerSpec::conv(c));
      a.layers.push_back(LayerSpec::relu());
    }
  }
  a.layers.push_back(LayerSpec::fc(classes));
  return a;
}

ArchSpec resnet(std::string name, Index stem,
                std::initializer_list<std::pair<Index, Index>> blocks,
                FeatureShape input, Index classes) {
  // (width, stride) per block.
  ArchSpec a{std::move(name), {}, input, classes};
  a.layers.push_back(LayerSpec::conv(stem));
  a.layers.push_back(LayerSpec::relu());
  for (const auto& [width, stride] : blocks) {
    a.layers.push_back(LayerSpec::residual(width, width, stride));
  }
  a.layers.push_back(LayerSpec::global_avgpool());
  a.layers.push_back(LayerSpec::fc(classes));
  return a;
}

}  // namespace

ArchSpec builtin_arch(std::string_view name, FeatureShape input,
                      Index num_classes) {
  ArchSpec a;
  if (name == "vgg19") {
    a = vgg("vgg19",
            {64, 64, 0, 128, 128, 0, 256, 256, 256, 256, 0, 512, 512, 512, 512,
             0, 512, 512, 512, 512, 0},
            input, num_classes);
  } else if (name == "vgg-lite") {
    a = vgg("vgg-lite", {32, 32, 0, 64, 64, 0, 128, 128, 0}, input,
            num_classes);
  } else if (name == "resnet18") {
    a = resnet("resnet18", 64,
               {{64, 1}, {64, 1}, {128, 2}, {128, 1}, {256, 2}, {256, 1},
                {512, 2}, {512, 1}},
               input, num_classes);
  } else if (name == "resnet-lite") {
    a = resnet("resnet-lite", 16, {{16, 1}, {32, 2}, {64, 2}}, input,
               num_classes);
  } else {
    throw ArchError("unknown builtin architecture '" + std::string(name) +
                    "' (expected vgg19, resnet18, vgg-lite, resnet-lite)");
  }
  return resolve(std::move(a));
}

std::string to_text(const ArchSpec& arch) {
  std::string out = "# densiprune architecture v1\n";
  out += fmt::format("name {}\n", arch.name.empty() ? "unnamed" : arch.name);
  out += fmt::format("input {} {} {}\n", arch.input_shape.channels,
                     arch.input_shape.height, arch.input_shape.width);
  out += fmt::format("classes {}\n", arch.num_classes);
  for (const auto& l : arch.layers) {
    switch (l.kind) {
      case LayerKind::conv:
        out += fmt::format("conv {} kernel={} stride={} padding={}{}\n",
                           l.out_channels, l.kernel, l.stride, l.padding,
                           l.prunable ? "" : " fixed");
        break;
      case LayerKind::relu:
        out += "relu\n";
        break;
      case LayerKind::maxpool:
        out += fmt::format("maxpool kernel={} stride={}\n", l.kernel, l.stride);
        break;
      case LayerKind::avgpool:
        if (l.kernel == 0) {
          out += "avgpool global\n";
        } else {
          out += fmt::format("avgpool kernel={} stride={}\n", l.kernel,
                             l.stride);
        }
        break;
      case LayerKind::fc:
        out += fmt::format("fc {}\n", l.out_channels);
        break;
      case LayerKind::residual_block:
        out += fmt::format("residual {} {} stride={}\n", l.block.conv1_channels,
                           l.block.conv2_channels, l.block.stride);
        break;
    }
  }
  return out;
}

namespace {

Index parse_index(const std::string& token, size_t line) {
  try {
    size_t used = 0;
    const long long v = std::stoll(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return static_cast<Index>(v);
  } catch (const std::exception&) {
    throw FormatError(fmt::format("arch line {}: expected integer, got '{}'",
                                  line, token));
  }
}

// Applies key=value options; unknown keys are errors.
void apply_option(LayerSpec& l, const std::string& token, size_t line) {
  if (token == "fixed") {
    l.prunable = false;
    return;
  }
  const auto eq = token.find('=');
  if (eq == std::string::npos) {
    throw FormatError(fmt::format("arch line {}: unexpected token '{}'", line,
                                  token));
  }
  const std::string key = token.substr(0, eq);
  const Index value = parse_index(token.substr(eq + 1), line);
  if (key == "kernel") {
    l.kernel = value;
  } else if (key == "stride") {
    l.stride = value;
    if (l.kind == LayerKind::residual_block) l.block.stride = value;
  } else if (key == "padding") {
    l.padding = value;
  } else {
    throw FormatError(fmt::format("arch line {}: unknown option '{}'", line,
                                  key));
  }
}

}  // namespace

ArchSpec parse_arch(std::string_view text) {
  ArchSpec arch;
  std::istringstream in{std::string(text)};
  std::string raw;
  size_t line_no = 0;
  bool have_input = false, have_classes = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) {
      raw.erase(hash);
    }
    std::istringstream line(raw);
    std::vector<std::string> tok;
    for (std::string t; line >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string& head = tok[0];
    auto need = [&](size_t n) {
      if (tok.size() < n) {
        throw FormatError(fmt::format("arch line {}: '{}' needs {} values",
                                      line_no, head, n - 1));
      }
    };
    auto options = [&](LayerSpec& l, size_t from) {
      for (size_t i = from; i < tok.size(); ++i) apply_option(l, tok[i], line_no);
    };
    if (head == "name") {
      need(2);
      arch.name = tok[1];
    } else if (head == "input") {
      need(4);
      arch.input_shape = {parse_index(tok[1], line_no),
                          parse_index(tok[2], line_no),
                          parse_index(tok[3], line_no)};
      have_input = true;
    } else if (head == "classes") {
      need(2);
      arch.num_classes = parse_index(tok[1], line_no);
      have_classes = true;
    } else if (head == "conv") {
      need(2);
      LayerSpec l = LayerSpec::conv(parse_index(tok[1], line_no));
      options(l, 2);
      arch.layers.push_back(l);
    } else if (head == "relu") {
      arch.layers.push_back(LayerSpec::relu());
    } else if (head == "maxpool") {
      LayerSpec l = LayerSpec::maxpool();
      options(l, 1);
      arch.layers.push_back(l);
    } else if (head == "avgpool") {
      LayerSpec l = LayerSpec::global_avgpool();
      if (tok.size() >= 2 && tok[1] != "global") {
        l.kernel = 2;
        l.stride = 2;
        options(l, 1);
      }
      arch.layers.push_back(l);
    } else if (head == "fc") {
      need(2);
      arch.layers.push_back(LayerSpec::fc(parse_index(tok[1], line_no)));
    } else if (head == "residual") {
      need(3);
      LayerSpec l = LayerSpec::residual(parse_index(tok[1], line_no),
                                        parse_index(tok[2], line_no));
      options(l, 3);
      arch.layers.push_back(l);
    } else {
      throw FormatError(fmt::format("arch line {}: unknown entry '{}'",
                                    line_no, head));
    }
  }
  if (!have_input || !have_classes) {
    throw FormatError("architecture text needs 'input' and 'classes' lines");
  }
  return resolve(std::move(arch));
}

ArchSpec load_arch_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) {
    throw ConfigError("cannot open architecture file " + path.string());
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_arch(ss.str());
}

}  // namespace densiprune
