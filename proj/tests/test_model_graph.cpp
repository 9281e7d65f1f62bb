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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "densiprune/arch.hpp"
#include "densiprune/cost.hpp"
#include "densiprune/network.hpp"
#include "densiprune/reference_tables.hpp"

using namespace densiprune;

namespace {

const FeatureShape kCifar{3, 32, 32};

std::vector<Index> vgg19_net0() {
  return {64, 64, 128, 128, 256, 256, 256, 256,
          512, 512, 512, 512, 512, 512, 512, 512};
}

std::vector<float> flat_params(const Network<float>& net) {
  std::vector<float> out;
  net.for_each_params([&](const LayerParams<float>& p) {
    out.insert(out.end(), p.weights.data(), p.weights.data() + p.weights.size());
    out.insert(out.end(), p.bias.data(), p.bias.data() + p.bias.size());
  });
  return out;
}

}  // namespace

TEST_CASE("pooling inherits channels from the previous conv") {
  ArchSpec a;
  a.name = "small";
  a.input_shape = kCifar;
  a.num_classes = 10;
  a.layers = {LayerSpec::conv(64), LayerSpec::relu(), LayerSpec::maxpool(),
              LayerSpec::conv(128), LayerSpec::relu(), LayerSpec::fc(10)};
  const auto s = propagate_shapes(a);
  CHECK(s[2].out == FeatureShape{64, 16, 16});
  CHECK(s[3].in.channels == 64);
  CHECK(s[3].out == FeatureShape{128, 16, 16});
  CHECK(s[5].in == FeatureShape{128, 16, 16});
}

TEST_CASE("vgg19 propagates to a 512x1x1 map under five pools") {
  const ArchSpec a = builtin_arch("vgg19", kCifar, 10);
  const auto s = propagate_shapes(a);
  int pools = 0;
  for (const auto& l : a.layers) pools += l.kind == LayerKind::maxpool;
  CHECK(pools == 5);
  CHECK(s.back().in == FeatureShape{512, 1, 1});
  CHECK(prunable_sizes(a) == vgg19_net0());
}

TEST_CASE("stride 2 conv on a 1x1 input fails to propagate") {
  ArchSpec a;
  a.input_shape = {3, 1, 1};
  a.num_classes = 2;
  a.layers = {LayerSpec::conv(4, 3, 2, 0), LayerSpec::relu(), LayerSpec::fc(2)};
  CHECK_THROWS_AS(propagate_shapes(a), ArchError);
}

TEST_CASE("malformed architectures are rejected") {
  ArchSpec a;
  a.input_shape = kCifar;
  a.num_classes = 10;
  CHECK_THROWS_AS(propagate_shapes(a), ArchError);  // empty
  a.layers = {LayerSpec::conv(8), LayerSpec::relu()};
  CHECK_THROWS_AS(propagate_shapes(a), ArchError);  // no head
  a.layers = {LayerSpec::conv(8), LayerSpec::relu(), LayerSpec::fc(5)};
  CHECK_THROWS_AS(propagate_shapes(a), ArchError);  // head width
  a.layers = {LayerSpec::conv(8), LayerSpec::fc(10)};
  CHECK_THROWS_AS(resolve(a), ArchError);  // prunable conv without relu
  auto pool = LayerSpec::maxpool();
  pool.prunable = true;
  a.layers = {LayerSpec::conv(8), LayerSpec::relu(), pool, LayerSpec::fc(10)};
  CHECK_THROWS_AS(propagate_shapes(a), ArchError);
  a.layers = {LayerSpec::conv(8), LayerSpec::relu(), LayerSpec::fc(10),
              LayerSpec::conv(8), LayerSpec::relu(), LayerSpec::fc(10)};
  CHECK_THROWS_AS(propagate_shapes(a), ArchError);
}

TEST_CASE("builtin channel lists") {
  CHECK(prunable_sizes(builtin_arch("vgg19", kCifar, 10)) == vgg19_net0());
  const auto r = prunable_sizes(builtin_arch("resnet18", kCifar, 10));
  CHECK(r == std::vector<Index>{64, 64, 64, 64, 64, 128, 128, 128, 128, 256,
                                256, 256, 256, 512, 512, 512, 512});
  const ArchSpec lite = builtin_arch("vgg-lite", {1, 28, 28}, 10);
  CHECK(prunable_sizes(lite) == std::vector<Index>{32, 32, 64, 64, 128, 128});
  std::vector<LayerKind> kinds;
  for (const auto& l : lite.layers) kinds.push_back(l.kind);
  using K = LayerKind;
  CHECK(kinds == std::vector<K>{K::conv, K::relu, K::conv, K::relu, K::maxpool,
                                K::conv, K::relu, K::conv, K::relu, K::maxpool,
                                K::conv, K::relu, K::conv, K::relu, K::maxpool,
                                K::fc});
  CHECK_NOTHROW(builtin_arch("resnet-lite", kCifar, 10));
  CHECK_THROWS_AS(builtin_arch("alexnet", kCifar, 10), ArchError);
}

TEST_CASE("measured relus follow prunable convs") {
  const ArchSpec a = builtin_arch("vgg-lite", {1, 8, 8}, 10);
  for (size_t i = 0; i < a.layers.size(); ++i) {
    const bool after_prunable =
        i > 0 && a.layers[i - 1].kind == LayerKind::conv && a.layers[i - 1].prunable;
    CHECK(a.layers[i].measure_ae == (a.layers[i].kind == LayerKind::relu && after_prunable));
  }
  CHECK(Network<float>::instantiate(a, 1).measured_layers() == 6);
}

TEST_CASE("resize examples") {
  ArchSpec a;
  a.input_shape = {1, 8, 8};
  a.num_classes = 2;
  a.layers = {LayerSpec::conv(64), LayerSpec::relu(), LayerSpec::conv(10),
              LayerSpec::relu(), LayerSpec::fc(2)};
  const std::vector<double> half = {0.5, 1.0};
  CHECK(prunable_sizes(resize_arch(a, half)) == std::vector<Index>{32, 10});
  const std::vector<double> ones = {1.0, 1.0};
  CHECK(resize_arch(a, ones) == resolve(a));
  const std::vector<double> tiny = {1.0, 0.04};
  CHECK(prunable_sizes(resize_arch(a, tiny)) == std::vector<Index>{64, 1});
  const std::vector<double> zero = {0.0, 0.0};
  CHECK(prunable_sizes(resize_arch(a, zero)) == std::vector<Index>{1, 1});

  const std::vector<double> short_ae = {0.5};
  CHECK_THROWS_AS(resize_arch(a, short_ae), ArchError);
  const std::vector<double> above = {0.5, 1.5};
  CHECK_THROWS_AS(resize_arch(a, above), ArchError);
  const std::vector<double> below = {-0.1, 0.5};
  CHECK_THROWS_AS(resize_arch(a, below), ArchError);
}

TEST_CASE("resize is monotone and always propagates") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const char* name : {"vgg19", "resnet18", "vgg-lite", "resnet-lite"}) {
    const ArchSpec a = builtin_arch(name, kCifar, 10);
    const size_t n = prunable_sizes(a).size();
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<double> lo(n), hi(n);
      for (size_t i = 0; i < n; ++i) {
        lo[i] = u(rng);
        hi[i] = lo[i] + (1.0 - lo[i]) * u(rng);
      }
      const ArchSpec small = resize_arch(a, lo);
      const ArchSpec big = resize_arch(a, hi);
      CHECK_NOTHROW(propagate_shapes(small));
      const auto s = prunable_sizes(small), b = prunable_sizes(big);
      for (size_t i = 0; i < n; ++i) {
        CHECK(s[i] <= b[i]);
        CHECK(s[i] >= 1);
      }
    }
  }
}

TEST_CASE("residual projection flags follow widths and stride") {
  ArchSpec a = builtin_arch("resnet18", kCifar, 10);
  const auto shapes = propagate_shapes(a);
  std::vector<bool> proj;
  for (size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].kind != LayerKind::residual_block) continue;
    proj.push_back(a.layers[i].block.projection);
    const bool want = shapes[i].in.channels != a.layers[i].block.conv2_channels ||
                      a.layers[i].block.stride != 1;
    CHECK(a.layers[i].block.projection == want);
  }
  CHECK(proj == std::vector<bool>{false, false, true, false, true, false, true, false});

  // After pruning, unequal widths need projections even at stride 1.
  const ArchSpec pruned = with_prunable_sizes(
      a, std::vector<Index>{21, 16, 30, 10, 22, 24, 47, 9, 39, 26, 48, 12, 39,
                            41, 85, 63, 188});
  int count = 0;
  for (const auto& l : pruned.layers) count += l.block.projection;
  CHECK(count == 8);
}

TEST_CASE("instantiate is deterministic in the seed") {
  const ArchSpec a = builtin_arch("resnet-lite", {3, 8, 8}, 10);
  const auto p1 = flat_params(Network<float>::instantiate(a, 5));
  const auto p2 = flat_params(Network<float>::instantiate(a, 5));
  const auto p3 = flat_params(Network<float>::instantiate(a, 6));
  REQUIRE(p1.size() == p2.size());
  CHECK(std::memcmp(p1.data(), p2.data(), p1.size() * sizeof(float)) == 0);
  CHECK(p1 != p3);
}

TEST_CASE("kaiming-uniform bounds and zero bias") {
  const ArchSpec a = builtin_arch("vgg-lite", {1, 8, 8}, 10);
  const auto net = Network<float>::instantiate(a, 3);
  net.for_each_params([](const LayerParams<float>& p) {
    const Index fan_in = p.weights.stride0();
    const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
    CHECK(p.weights.values().abs().maxCoeff() <= bound);
    CHECK(p.weights.values().abs().maxCoeff() > 0.5f * bound);
    CHECK((p.bias.values() == 0.0f).all());
  });
}

TEST_CASE("resnet18 net0 instantiates with 17 measured layers") {
  const auto net = Network<float>::instantiate(builtin_arch("resnet18", kCifar, 10), 1);
  CHECK(net.measured_layers() == 17);
}

TEST_CASE("instantiated parameter count equals the cost model") {
  for (const auto& n : published_nets()) {
    const ArchSpec a = published_arch(n);
    const auto net = Network<float>::instantiate(a, 1);
    const auto cost = network_cost(a, {.include_bias = true, .count_projections = true});
    CHECK(net.parameter_count(true) == cost.total_params);
    CHECK(net.parameter_count(false) == network_cost(a).total_params);
  }
}

TEST_CASE("forward output shape and capture") {
  const ArchSpec a = builtin_arch("resnet-lite", {3, 8, 8}, 10);
  auto net = Network<float>::instantiate(a, 2);
  Tensor<float> x({3, 3, 8, 8});
  for (Index i = 0; i < x.size(); ++i) x[i] = std::sin(0.1f * static_cast<float>(i));
  std::map<size_t, Tensor<float>> got;
  const std::vector<size_t> which = {0, 2};
  ForwardHooks<float> hooks;
  hooks.capture_layers = which;
  hooks.captured = &got;
  const auto y = net.forward(x, hooks, false);
  CHECK(y.shape() == Shape{3, 10});
  CHECK(got.at(0).shape() == Shape{3, 16, 8, 8});
  CHECK(got.at(2).shape() == Shape{3, 16, 8, 8});
  CHECK_THROWS_AS(net.forward(Tensor<float>({1, 3, 9, 9})), ShapeError);
}

TEST_CASE("architecture text round trip") {
  for (const char* name : {"vgg19", "resnet18", "vgg-lite", "resnet-lite"}) {
    const ArchSpec a = builtin_arch(name, kCifar, 10);
    CHECK(parse_arch(to_text(a)) == a);
  }
  ArchSpec fixed;
  fixed.name = "fixed";
  fixed.input_shape = {1, 6, 6};
  fixed.num_classes = 3;
  fixed.layers = {LayerSpec::conv(4, 3, 1, 1, false), LayerSpec::relu(),
                  LayerSpec::conv(5, 1, 2, 0), LayerSpec::relu(),
                  LayerSpec::fc(3)};
  const ArchSpec r = resolve(fixed);
  CHECK(parse_arch(to_text(r)) == r);
  CHECK(prunable_sizes(r) == std::vector<Index>{5});
}

TEST_CASE("architecture text errors") {
  CHECK_THROWS_AS(parse_arch("name x\ninput 1 8 8\nclasses 2\nconv\nfc 2\n"), FormatError);
  CHECK_THROWS_AS(parse_arch("name x\ninput 1 8 8\nclasses 2\nlstm 4\nfc 2\n"), FormatError);
  CHECK_THROWS_AS(parse_arch("name x\ninput 1 8\nclasses 2\nfc 2\n"), FormatError);
  CHECK_THROWS_AS(parse_arch("name x\ninput 1 8 8\nclasses 2\nconv 4 kernal=3\nrelu\nfc 2\n"),
                  FormatError);
  CHECK_THROWS_AS(load_arch_file("/nonexistent/arch.txt"), ConfigError);
}

TEST_CASE("bundled table configurations match the embedded lists") {
  const std::filesystem::path dir = DENSIPRUNE_SOURCE_DIR "/archs";
  for (const auto& n : published_nets()) {
    const auto path = dir / (n.model + "_" + n.dataset + "_net" +
                             std::to_string(n.index) + ".arch");
    CAPTURE(path.string());
    const ArchSpec a = load_arch_file(path);
    CHECK(prunable_sizes(a) == n.sizes);
    CHECK(a == published_arch(n));
  }
}
