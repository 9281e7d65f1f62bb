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

#ifndef DENSIPRUNE_NETWORK_HPP
#define DENSIPRUNE_NETWORK_HPP

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "densiprune/ae.hpp"
#include "densiprune/arch.hpp"
#include "densiprune/layers.hpp"
#include "densiprune/optimizer.hpp"

namespace densiprune {

template <typename Scalar>
struct ForwardHooks {
  AeAccumulator* ae = nullptr;  // receives one record per measured relu
  std::span<const size_t> capture_layers;
  std::map<size_t, Tensor<Scalar>>* captured = nullptr;
};

namespace nodes {

template <typename Scalar>
struct Conv {
  ConvGeometry geom;
  LayerParams<Scalar> params;
  Tensor<Scalar> input;
  bool cached = false;

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool training) {
    if (training) {
      input = x;
      cached = true;
    }
    return conv2d_forward(x, params, geom);
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& g) {
    if (!cached) throw StateError("conv backward without forward cache");
    return conv2d_backward(g, input, params, geom);
  }
  template <typename F>
  void for_each_params(F&& f) {
    f(params);
  }
};

template <typename Scalar>
struct Relu {
  int slot = -1;  // AE layer index, -1 = not measured
  Tensor<Scalar> output;

  Tensor<Scalar> forward(const Tensor<Scalar>& x, AeAccumulator* ae) {
    auto r = relu_forward(x);
    if (ae != nullptr && slot >= 0) {
      ae->record(static_cast<size_t>(slot), r.nonzero_count, r.total_count);
    }
    output = r.output;
    return std::move(r.output);
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& g) {
    if (output.empty()) throw StateError("relu backward without forward");
    return relu_backward(g, output);
  }
};

template <typename Scalar>
struct MaxPool {
  PoolGeometry geom;
  std::vector<Index> argmax;
  Shape in_shape;

  Tensor<Scalar> forward(const Tensor<Scalar>& x) {
    auto r = maxpool_forward(x, geom);
    argmax = std::move(r.argmax);
    in_shape = x.shape();
    return std::move(r.output);
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& g) {
    if (in_shape.empty()) throw StateError("maxpool backward without forward");
    return maxpool_backward(g, std::span<const Index>(argmax), in_shape);
  }
};

template <typename Scalar>
struct AvgPool {
  bool global = false;
  PoolGeometry geom;
  Shape in_shape;

  Tensor<Scalar> forward(const Tensor<Scalar>& x) {
    if (global) geom = {x.dim(2), 1};
    in_shape = x.shape();
    return avgpool_forward(x, geom);
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& g) {
    if (in_shape.empty()) throw StateError("avgpool backward without forward");
    return avgpool_backward(g, in_shape, geom);
  }
};

template <typename Scalar>
struct Fc {
  LayerParams<Scalar> params;
  Tensor<Scalar> input;
  bool cached = false;

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool training) {
    if (training) {
      input = x;
      cached = true;
    }
    return fc_forward(x, params);
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& g) {
    if (!cached) throw StateError("fc backward without forward cache");
    return fc_backward(g, input, params);
  }
  template <typename F>
  void for_each_params(F&& f) {
    f(params);
  }
};

/// relu(conv2(relu(conv1(x))) + shortcut(x)); the shortcut is identity or a
/// 1x1 projection conv.
template <typename Scalar>
struct Residual {
  Conv<Scalar> conv1;
  Relu<Scalar> relu1;
  Conv<Scalar> conv2;
  std::optional<Conv<Scalar>> projection;
  Relu<Scalar> out_relu;

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool training,
                         AeAccumulator* ae) {
    Tensor<Scalar> h = relu1.forward(conv1.forward(x, training), ae);
    Tensor<Scalar> y = conv2.forward(h, training);
    if (projection) {
      y.values() += projection->forward(x, training).values();
    } else {
      y.values() += x.values();
    }
    return out_relu.forward(y, ae);
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& g) {
    const Tensor<Scalar> dy = out_relu.backward(g);
    Tensor<Scalar> dx = conv1.backward(relu1.backward(conv2.backward(dy)));
    if (projection) {
      dx.values() += projection->backward(dy).values();
    } else {
      dx.values() += dy.values();
    }
    return dx;
  }
  template <typename F>
  void for_each_params(F&& f) {
    f(conv1.params);
    f(conv2.params);
    if (projection) f(projection->params);
  }
};

template <typename Scalar>
using Node = std::variant<Conv<Scalar>, Relu<Scalar>, MaxPool<Scalar>,
                          AvgPool<Scalar>, Fc<Scalar>, Residual<Scalar>>;

}  // namespace nodes

/// A trainable instance of an ArchSpec. Weights come only from (arch, seed):
/// nothing is ever copied from another network.
template <typename Scalar>
class Network {
 public:
  /// Kaiming-uniform fan-in weights, U(-sqrt(6/fan_in), sqrt(6/fan_in)),
  /// zero biases, drawn in layer order from one mt19937_64 stream.
  static Network instantiate(const ArchSpec& arch, std::uint64_t seed) {
    Network net;
    net.arch_ = resolve(arch);
    const auto shapes = propagate_shapes(net.arch_);
    std::mt19937_64 engine(seed);
    auto init = [&engine](LayerParams<Scalar>& p, Index fan_in) {
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Index i = 0; i < p.weights.size(); ++i) {
        p.weights[i] = static_cast<Scalar>(dist(engine));
      }
    };
    auto make_conv = [&](Index in_c, Index out_c, Index k, Index s, Index pad) {
      nodes::Conv<Scalar> c;
      c.geom = {k, s, pad};
      c.params = LayerParams<Scalar>::make({out_c, in_c, k, k}, out_c);
      init(c.params, in_c * k * k);
      return c;
    };
    int slot = 0;
    for (size_t i = 0; i < net.arch_.layers.size(); ++i) {
      const LayerSpec& l = net.arch_.layers[i];
      const LayerShapes& s = shapes[i];
      switch (l.kind) {
        case LayerKind::conv:
          net.nodes_.emplace_back(make_conv(s.in.channels, l.out_channels,
                                            l.kernel, l.stride, l.padding));
          break;
        case LayerKind::relu: {
          nodes::Relu<Scalar> r;
          if (l.measure_ae) r.slot = slot++;
          net.nodes_.emplace_back(std::move(r));
          break;
        }
        case LayerKind::maxpool: {
          nodes::MaxPool<Scalar> m;
          m.geom = {l.kernel, l.stride};
          net.nodes_.emplace_back(std::move(m));
          break;
        }
        case LayerKind::avgpool: {
          nodes::AvgPool<Scalar> a;
          a.global = l.kernel == 0;
          a.geom = {l.kernel, l.stride};
          net.nodes_.emplace_back(std::move(a));
          break;
        }
        case LayerKind::fc: {
          nodes::Fc<Scalar> f;
          const Index features = s.in.channels * s.in.height * s.in.width;
          f.params = LayerParams<Scalar>::make({l.out_channels, features},
                                               l.out_channels);
          init(f.params, features);
          net.nodes_.emplace_back(std::move(f));
          break;
        }
        case LayerKind::residual_block: {
          nodes::Residual<Scalar> r;
          const auto& b = l.block;
          r.conv1 = make_conv(s.in.channels, b.conv1_channels, 3, b.stride, 1);
          r.relu1.slot = l.prunable ? slot++ : -1;
          r.conv2 = make_conv(b.conv1_channels, b.conv2_channels, 3, 1, 1);
          if (s.projection) {
            r.projection =
                make_conv(s.in.channels, b.conv2_channels, 1, b.stride, 0);
          }
          r.out_relu.slot = l.prunable ? slot++ : -1;
          net.nodes_.emplace_back(std::move(r));
          break;
        }
      }
    }
    net.measured_ = static_cast<size_t>(slot);
    return net;
  }

  const ArchSpec& arch() const { return arch_; }
  size_t measured_layers() const { return measured_; }

  /// `training` keeps the caches backward() needs.
  Tensor<Scalar> forward(const Tensor<Scalar>& input,
                         const ForwardHooks<Scalar>& hooks = {},
                         bool training = true) {
    const auto& s = arch_.input_shape;
    if (input.rank() != 4 || input.dim(1) != s.channels ||
        input.dim(2) != s.height || input.dim(3) != s.width) {
      throw ShapeError("network '" + arch_.name + "' expects [B," +
                       std::to_string(s.channels) + "," +
                       std::to_string(s.height) + "," +
                       std::to_string(s.width) + "] input, got " +
                       shape_string(input.shape()));
    }
    Tensor<Scalar> x = input;
    for (size_t i = 0; i < nodes_.size(); ++i) {
      x = std::visit(
          [&](auto& node) -> Tensor<Scalar> {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, nodes::Relu<Scalar>>) {
              return node.forward(x, hooks.ae);
            } else if constexpr (std::is_same_v<T, nodes::MaxPool<Scalar>> ||
                                 std::is_same_v<T, nodes::AvgPool<Scalar>>) {
              return node.forward(x);
            } else if constexpr (std::is_same_v<T, nodes::Residual<Scalar>>) {
              return node.forward(x, training, hooks.ae);
            } else {
              return node.forward(x, training);
            }
          },
          nodes_[i]);
      ensure_finite(x, "output of layer " + std::to_string(i));
      if (hooks.captured != nullptr) {
        for (size_t want : hooks.capture_layers) {
          if (want == i) (*hooks.captured)[i] = x;
        }
      }
    }
    return x;
  }

  /// Back-propagates dL/dlogits, accumulating parameter gradients. Returns
  /// dL/dinput.
  Tensor<Scalar> backward(const Tensor<Scalar>& logit_grad) {
    Tensor<Scalar> g = logit_grad;
    for (size_t i = nodes_.size(); i-- > 0;) {
      g = std::visit([&](auto& node) { return node.backward(g); }, nodes_[i]);
      ensure_finite(g, "gradient of layer " + std::to_string(i));
    }
    return g;
  }

  template <typename F>
  void for_each_params(F&& f) {
    for (auto& n : nodes_) {
      std::visit(
          [&](auto& node) {
            if constexpr (requires { node.for_each_params(f); }) {
              node.for_each_params(f);
            }
          },
          n);
    }
  }

  template <typename F>
  void for_each_params(F&& f) const {
    const_cast<Network*>(this)->for_each_params(
        [&](LayerParams<Scalar>& p) { f(static_cast<const LayerParams<Scalar>&>(p)); });
  }

  void sgd_step(const OptimizerConfig& opt, int epoch) {
    for_each_params([&](LayerParams<Scalar>& p) { densiprune::sgd_step(p, opt, epoch); });
  }

  void zero_grad() {
    for_each_params([](LayerParams<Scalar>& p) { p.zero_grad(); });
  }

  Index parameter_count(bool include_bias) const {
    Index total = 0;
    for_each_params(
        [&](const LayerParams<Scalar>& p) { total += p.count(include_bias); });
    return total;
  }

 private:
  ArchSpec arch_;
  std::vector<nodes::Node<Scalar>> nodes_;
  size_t measured_ = 0;
};

}  // namespace densiprune

#endif  // DENSIPRUNE_NETWORK_HPP
