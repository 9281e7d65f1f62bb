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

// Central finite-difference checks for every backward pass, in double.

#ifndef DENSIPRUNE_TESTS_GRADCHECK_HPP
#define DENSIPRUNE_TESTS_GRADCHECK_HPP

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "densiprune/layers.hpp"
#include "densiprune/network.hpp"

namespace densiprune::testing {

using Td = Tensor<double>;

inline Td random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                        double hi = 1.0) {
  Td t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (Index i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

// Values spread apart so that neither relu kinks nor maxpool ties sit within
// eps of a sample.
inline Td spread_tensor(Shape shape, std::mt19937_64& rng) {
  Td t(std::move(shape));
  std::vector<double> v(static_cast<size_t>(t.size()));
  for (size_t i = 0; i < v.size(); ++i) {
    v[i] = (static_cast<double>(i) + 0.25) / static_cast<double>(v.size()) - 0.5;
  }
  std::shuffle(v.begin(), v.end(), rng);
  for (Index i = 0; i < t.size(); ++i) t[i] = 4.0 * v[static_cast<size_t>(i)];
  return t;
}

/// ||a - n|| / max(||a||, ||n||); 0 when both vanish.
inline double relative_error(const Td& analytic, const Td& numeric) {
  const double denom = std::max(analytic.values().matrix().norm(),
                                numeric.values().matrix().norm());
  if (denom == 0.0) return 0.0;
  return (analytic.values() - numeric.values()).matrix().norm() / denom;
}

template <typename Loss>
Td numeric_gradient(Td& x, Loss&& loss, double eps = 1e-5) {
  Td g(x.shape());
  for (Index i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = loss();
    x[i] = keep - eps;
    const double down = loss();
    x[i] = keep;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

inline double dot(const Td& a, const Td& b) {
  return (a.values() * b.values()).sum();
}

struct GradResult {
  std::string name;
  double worst = 0.0;  // largest relative error over all checked tensors
};

inline void track(GradResult& r, const Td& a, const Td& n) {
  r.worst = std::max(r.worst, relative_error(a, n));
}

// Loss is <layer(x), R> for a fixed random R, so upstream gradient is R.
inline GradResult check_conv(std::mt19937_64& rng, Index batch, Index n,
                             Index m, Index size, Index k, Index s, Index p,
                             bool bias) {
  GradResult r{fmt::format("conv B{} N{} M{} I{} k{} s{} p{}{}", batch, n, m,
                           size, k, s, p, bias ? " bias" : "")};
  const ConvGeometry g{k, s, p};
  Td x = random_tensor({batch, n, size, size}, rng);
  auto params = LayerParams<double>::make({m, n, k, k}, bias ? m : 0);
  params.weights = random_tensor(params.weights.shape(), rng);
  if (bias) params.bias = random_tensor(params.bias.shape(), rng);
  const Td out = conv2d_forward(x, params, g);
  const Td proj = random_tensor(out.shape(), rng);
  const Td dx = conv2d_backward(proj, x, params, g);
  auto loss = [&] { return dot(conv2d_forward(x, params, g), proj); };
  track(r, dx, numeric_gradient(x, loss));
  track(r, params.grad_weights, numeric_gradient(params.weights, loss));
  if (bias) track(r, params.grad_bias, numeric_gradient(params.bias, loss));
  return r;
}

inline GradResult check_relu(std::mt19937_64& rng, Index count) {
  GradResult r{fmt::format("relu n{}", count)};
  Td x = spread_tensor({count}, rng);
  const auto fwd = relu_forward(x);
  const Td proj = random_tensor(x.shape(), rng);
  const Td dx = relu_backward(proj, fwd.output);
  track(r, dx, numeric_gradient(x, [&] { return dot(relu_forward(x).output, proj); }));
  return r;
}

inline GradResult check_maxpool(std::mt19937_64& rng, Index channels,
                                Index size, Index window, Index stride) {
  GradResult r{fmt::format("maxpool C{} I{} w{} s{}", channels, size, window,
                           stride)};
  const PoolGeometry g{window, stride};
  Td x = spread_tensor({2, channels, size, size}, rng);
  const auto fwd = maxpool_forward(x, g);
  const Td proj = random_tensor(fwd.output.shape(), rng);
  const Td dx = maxpool_backward(proj, fwd.argmax, x.shape());
  track(r, dx, numeric_gradient(x, [&] { return dot(maxpool_forward(x, g).output, proj); }));
  return r;
}

inline GradResult check_avgpool(std::mt19937_64& rng, Index channels,
                                Index size, Index window, Index stride) {
  GradResult r{fmt::format("avgpool C{} I{} w{} s{}", channels, size, window,
                           stride)};
  const PoolGeometry g{window, stride};
  Td x = random_tensor({2, channels, size, size}, rng);
  const Td out = avgpool_forward(x, g);
  const Td proj = random_tensor(out.shape(), rng);
  const Td dx = avgpool_backward(proj, x.shape(), g);
  track(r, dx, numeric_gradient(x, [&] { return dot(avgpool_forward(x, g), proj); }));
  return r;
}

inline GradResult check_fc(std::mt19937_64& rng, Index batch, Index features,
                           Index classes) {
  GradResult r{fmt::format("fc B{} F{} C{}", batch, features, classes)};
  Td x = random_tensor({batch, features}, rng);
  auto params = LayerParams<double>::make({classes, features}, classes);
  params.weights = random_tensor(params.weights.shape(), rng);
  params.bias = random_tensor(params.bias.shape(), rng);
  const Td proj = random_tensor({batch, classes}, rng);
  const Td dx = fc_backward(proj, x, params);
  auto loss = [&] { return dot(fc_forward(x, params), proj); };
  track(r, dx, numeric_gradient(x, loss));
  track(r, params.grad_weights, numeric_gradient(params.weights, loss));
  track(r, params.grad_bias, numeric_gradient(params.bias, loss));
  return r;
}

inline GradResult check_xent(std::mt19937_64& rng, Index batch, Index classes) {
  GradResult r{fmt::format("softmax_xent B{} C{}", batch, classes)};
  Td z = random_tensor({batch, classes}, rng, -3.0, 3.0);
  std::vector<int> labels(static_cast<size_t>(batch));
  std::uniform_int_distribution<int> pick(0, static_cast<int>(classes) - 1);
  for (auto& l : labels) l = pick(rng);
  const auto fwd = softmax_xent(z, labels);
  track(r, fwd.logit_grad,
        numeric_gradient(z, [&] { return softmax_xent(z, labels).loss; }));
  return r;
}

// Smallest distance, over the network built by check_network, of a relu
// input from zero or of a positive maxpool maximum from its runner-up. A
// central difference is exact up to O(eps^2) only when no such switch point
// lies within reach of the step.
inline double kink_margin(Network<double>& net, const Td& x, Index stride) {
  std::vector<const LayerParams<double>*> p;
  net.for_each_params([&](const LayerParams<double>& q) { p.push_back(&q); });
  double margin = std::numeric_limits<double>::infinity();
  auto relu = [&](const Td& z) {
    margin = std::min(margin, z.values().abs().minCoeff());
    return relu_forward(z).output;
  };
  const Td h0 = relu(conv2d_forward(x, *p[0], {3, 1, 1}));
  const Td h1 = relu(conv2d_forward(h0, *p[1], {3, stride, 1}));
  Td y = conv2d_forward(h1, *p[2], {3, 1, 1});
  if (p.size() == 5) {
    y.values() += conv2d_forward(h0, *p[3], {1, stride, 0}).values();
  } else {
    y.values() += h0.values();
  }
  const Td h2 = relu(y);
  const Index side = h2.dim(3), planes = h2.dim(0) * h2.dim(1);
  for (Index plane = 0; plane < planes; ++plane)
    for (Index i = 0; i + 1 < h2.dim(2); ++i)
      for (Index j = 0; j + 1 < side; ++j) {
        const Index o = (plane * h2.dim(2) + i) * side + j;
        std::array<double, 4> w = {h2[o], h2[o + 1], h2[o + side],
                                   h2[o + side + 1]};
        std::sort(w.begin(), w.end());
        if (w[3] > 0.0) margin = std::min(margin, w[3] - w[2]);
      }
  return margin;
}

// Whole network, including a residual block with a projection shortcut:
// every parameter gradient and the input gradient against the loss. Inputs
// are redrawn until every switch point is at least kKinkMargin away.
inline GradResult check_network(std::uint64_t seed, Index c1, Index c2,
                                Index stride) {
  constexpr double kKinkMargin = 1e-3;
  GradResult r{fmt::format("network conv{} residual({},{}) stride {}", c1, c2,
                           c2, stride)};
  ArchSpec arch;
  arch.name = "gradcheck";
  arch.input_shape = {2, 6, 6};
  arch.num_classes = 3;
  arch.layers = {LayerSpec::conv(c1), LayerSpec::relu(),
                 LayerSpec::residual(c2, c2, stride), LayerSpec::maxpool(2, 1),
                 LayerSpec::global_avgpool(), LayerSpec::fc(3)};
  auto net = Network<double>::instantiate(arch, seed);
  std::mt19937_64 rng(seed ^ 0x5bd1e995u);
  Td x = random_tensor({2, 2, 6, 6}, rng);
  for (int draw = 1; kink_margin(net, x, stride) < kKinkMargin; ++draw) {
    if (draw == 1000) throw std::runtime_error("no smooth gradient-check input");
    x = random_tensor({2, 2, 6, 6}, rng);
  }
  const std::vector<int> labels = {0, 2};
  auto loss = [&] { return softmax_xent(net.forward(x, {}, false), labels).loss; };

  net.zero_grad();
  const auto fwd = softmax_xent(net.forward(x, {}, true), labels);
  const Td dx = net.backward(fwd.logit_grad);
  track(r, dx, numeric_gradient(x, loss));
  std::vector<LayerParams<double>*> all;
  net.for_each_params([&](LayerParams<double>& p) { all.push_back(&p); });
  for (auto* p : all) {
    track(r, p->grad_weights, numeric_gradient(p->weights, loss));
    if (p->has_bias()) track(r, p->grad_bias, numeric_gradient(p->bias, loss));
  }
  return r;
}

/// The fixed suite of random small configurations; each call draws one.
inline GradResult random_gradient_case(int i, std::uint64_t seed) {
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(i) * 7919u);
  auto pick = [&rng](Index lo, Index hi) {
    return std::uniform_int_distribution<Index>(lo, hi)(rng);
  };
  switch (i % 7) {
    case 0:
    case 1: {
      const Index k = pick(0, 1) ? 3 : 1;
      const Index p = k == 1 ? 0 : pick(0, 1);
      return check_conv(rng, pick(1, 2), pick(1, 3), pick(1, 3), pick(k, 5), k,
                        pick(1, 2), p, i % 2 == 0);
    }
    case 2:
      return check_relu(rng, pick(4, 40));
    case 3: {
      const Index w = pick(1, 2);
      return check_maxpool(rng, pick(1, 3), pick(2, 5), w, pick(1, 2));
    }
    case 4: {
      const Index w = pick(1, 3);
      return check_avgpool(rng, pick(1, 3), pick(w, 5), w, pick(1, 2));
    }
    case 5:
      return pick(0, 1) ? check_fc(rng, pick(1, 3), pick(1, 8), pick(1, 5))
                        : check_xent(rng, pick(1, 4), pick(2, 6));
    default:
      return check_network(seed + static_cast<std::uint64_t>(i), pick(2, 3),
                           pick(2, 4), pick(1, 2));
  }
}

}  // namespace densiprune::testing

#endif  // DENSIPRUNE_TESTS_GRADCHECK_HPP
