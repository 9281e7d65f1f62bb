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

// Forward/backward kernels for the fixed layer set: conv2d, relu, max/avg
// pooling, fully-connected and softmax cross-entropy. All kernels are free
// function templates over the scalar type so the same code trains in float
// and gradient-checks in double.

#ifndef DENSIPRUNE_LAYERS_HPP
#define DENSIPRUNE_LAYERS_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "densiprune/tensor.hpp"

namespace densiprune {

struct ConvGeometry {
  Index kernel = 3;
  Index stride = 1;
  Index padding = 1;
};

struct PoolGeometry {
  Index window = 2;
  Index stride = 2;
};

/// floor((in + 2p - k) / s) + 1; throws ShapeError when that is < 1.
inline Index conv_output_size(Index in, Index kernel, Index stride,
                              Index padding) {
  if (kernel < 1 || stride < 1 || padding < 0) {
    throw ShapeError("invalid conv geometry k=" + std::to_string(kernel) +
                     " s=" + std::to_string(stride) +
                     " p=" + std::to_string(padding));
  }
  const Index span = in + 2 * padding - kernel;
  if (span < 0) {
    throw ShapeError("conv kernel " + std::to_string(kernel) +
                     " does not fit input " + std::to_string(in) +
                     " with padding " + std::to_string(padding));
  }
  return span / stride + 1;
}

inline Index pool_output_size(Index in, Index window, Index stride) {
  if (window < 1 || stride < 1 || window > in) {
    throw ShapeError("invalid pooling window " + std::to_string(window) +
                     " (stride " + std::to_string(stride) + ") for input " +
                     std::to_string(in));
  }
  return (in - window) / stride + 1;
}

/// Weights, optional bias, their gradients and momentum buffers.
template <typename Scalar>
struct LayerParams {
  Tensor<Scalar> weights;
  Tensor<Scalar> bias;  // empty when the layer has no bias
  Tensor<Scalar> grad_weights;
  Tensor<Scalar> grad_bias;
  Tensor<Scalar> velocity_weights;
  Tensor<Scalar> velocity_bias;

  static LayerParams make(const Shape& weight_shape, Index bias_size) {
    LayerParams p;
    p.weights = Tensor<Scalar>(weight_shape);
    p.grad_weights = Tensor<Scalar>(weight_shape);
    p.velocity_weights = Tensor<Scalar>(weight_shape);
    if (bias_size > 0) {
      p.bias = Tensor<Scalar>({bias_size});
      p.grad_bias = Tensor<Scalar>({bias_size});
      p.velocity_bias = Tensor<Scalar>({bias_size});
    }
    return p;
  }

  bool has_bias() const { return !bias.empty(); }

  void zero_grad() {
    grad_weights.values().setZero();
    grad_bias.values().setZero();
  }

  Index count(bool include_bias) const {
    return weights.size() + (include_bias ? bias.size() : 0);
  }
};

namespace detail {

template <typename Scalar>
void require_rank(const Tensor<Scalar>& t, Index rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + " expects rank " +
                     std::to_string(rank) + ", got " + shape_string(t.shape()));
  }
}

template <typename Scalar>
Eigen::Map<const RowMatrix<Scalar>> sample_view(const Tensor<Scalar>& t,
                                                Index b, Index rows,
                                                Index cols) {
  return Eigen::Map<const RowMatrix<Scalar>>(t.data() + b * rows * cols, rows,
                                             cols);
}

template <typename Scalar>
Eigen::Map<RowMatrix<Scalar>> sample_view(Tensor<Scalar>& t, Index b,
                                          Index rows, Index cols) {
  return Eigen::Map<RowMatrix<Scalar>>(t.data() + b * rows * cols, rows, cols);
}

}  // namespace detail

/// Unfolds [B,N,H,W] into a (N*k*k) x (B*Oh*Ow) patch matrix. Row order is
/// (channel, ky, kx), matching the [M,N,k,k] weight layout.
template <typename Scalar>
RowMatrix<Scalar> im2col(const Tensor<Scalar>& input, const ConvGeometry& g,
                         Index out_h, Index out_w) {
  const Index batch = input.dim(0), channels = input.dim(1);
  const Index height = input.dim(2), width = input.dim(3);
  const Index k = g.kernel, plane = out_h * out_w;
  RowMatrix<Scalar> cols = RowMatrix<Scalar>::Zero(channels * k * k,
                                                   batch * plane);
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      const Scalar* src = input.data() + (b * channels + c) * height * width;
      for (Index ky = 0; ky < k; ++ky) {
        for (Index kx = 0; kx < k; ++kx) {
          Scalar* row = cols.row((c * k + ky) * k + kx).data() + b * plane;
          for (Index oy = 0; oy < out_h; ++oy) {
            const Index iy = oy * g.stride - g.padding + ky;
            if (iy < 0 || iy >= height) continue;
            for (Index ox = 0; ox < out_w; ++ox) {
              const Index ix = ox * g.stride - g.padding + kx;
              if (ix < 0 || ix >= width) continue;
              row[oy * out_w + ox] = src[iy * width + ix];
            }
          }
        }
      }
    }
  }
  return cols;
}

/// Adjoint of im2col: scatters patch gradients back onto an input-shaped
/// tensor, summing overlaps.
template <typename Scalar>
Tensor<Scalar> col2im(const RowMatrix<Scalar>& cols, const Shape& input_shape,
                      const ConvGeometry& g, Index out_h, Index out_w) {
  Tensor<Scalar> grad(input_shape);
  const Index batch = input_shape[0], channels = input_shape[1];
  const Index height = input_shape[2], width = input_shape[3];
  const Index k = g.kernel, plane = out_h * out_w;
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      Scalar* dst = grad.data() + (b * channels + c) * height * width;
      for (Index ky = 0; ky < k; ++ky) {
        for (Index kx = 0; kx < k; ++kx) {
          const Scalar* row =
              cols.row((c * k + ky) * k + kx).data() + b * plane;
          for (Index oy = 0; oy < out_h; ++oy) {
            const Index iy = oy * g.stride - g.padding + ky;
            if (iy < 0 || iy >= height) continue;
            for (Index ox = 0; ox < out_w; ++ox) {
              const Index ix = ox * g.stride - g.padding + kx;
              if (ix < 0 || ix >= width) continue;
              dst[iy * width + ix] += row[oy * out_w + ox];
            }
          }
        }
      }
    }
  }
  return grad;
}

/// Cross-correlation of [B,N,H,W] with [M,N,k,k] weights -> [B,M,Oh,Ow].
template <typename Scalar>
Tensor<Scalar> conv2d_forward(const Tensor<Scalar>& input,
                              const LayerParams<Scalar>& params,
                              const ConvGeometry& g) {
  detail::require_rank(input, 4, "conv2d input");
  detail::require_rank(params.weights, 4, "conv2d weights");
  const Index batch = input.dim(0), channels = input.dim(1);
  const Index out_channels = params.weights.dim(0);
  if (params.weights.dim(1) != channels || params.weights.dim(2) != g.kernel ||
      params.weights.dim(3) != g.kernel) {
    throw ShapeError("conv2d weights " + shape_string(params.weights.shape()) +
                     " do not match input " + shape_string(input.shape()) +
                     " with kernel " + std::to_string(g.kernel));
  }
  const Index out_h = conv_output_size(input.dim(2), g.kernel, g.stride,
                                       g.padding);
  const Index out_w = conv_output_size(input.dim(3), g.kernel, g.stride,
                                       g.padding);
  const Index plane = out_h * out_w;

  const RowMatrix<Scalar> cols = im2col(input, g, out_h, out_w);
  RowMatrix<Scalar> out_mat = params.weights.matrix(out_channels) * cols;
  if (params.has_bias()) {
    out_mat.colwise() += params.bias.values().matrix();
  }
  Tensor<Scalar> out({batch, out_channels, out_h, out_w});
  for (Index b = 0; b < batch; ++b) {
    detail::sample_view(out, b, out_channels, plane) =
        out_mat.middleCols(b * plane, plane);
  }
  return out;
}

/// Returns dL/dinput and accumulates into params.grad_weights/grad_bias.
template <typename Scalar>
Tensor<Scalar> conv2d_backward(const Tensor<Scalar>& upstream,
                               const Tensor<Scalar>& cached_input,
                               LayerParams<Scalar>& params,
                               const ConvGeometry& g) {
  detail::require_rank(upstream, 4, "conv2d upstream gradient");
  const Index batch = upstream.dim(0), out_channels = upstream.dim(1);
  const Index out_h = upstream.dim(2), out_w = upstream.dim(3);
  const Index plane = out_h * out_w;
  if (cached_input.rank() != 4 || cached_input.dim(0) != batch ||
      out_channels != params.weights.dim(0)) {
    throw ShapeError("conv2d backward: upstream " +
                     shape_string(upstream.shape()) + " vs cached input " +
                     shape_string(cached_input.shape()));
  }

  RowMatrix<Scalar> dout(out_channels, batch * plane);
  for (Index b = 0; b < batch; ++b) {
    dout.middleCols(b * plane, plane) =
        detail::sample_view(upstream, b, out_channels, plane);
  }
  const RowMatrix<Scalar> cols = im2col(cached_input, g, out_h, out_w);
  params.grad_weights.matrix(out_channels).noalias() += dout * cols.transpose();
  if (params.has_bias()) {
    params.grad_bias.values() += dout.rowwise().sum().array();
  }
  const RowMatrix<Scalar> dcols =
      params.weights.matrix(out_channels).transpose() * dout;
  return col2im(dcols, cached_input.shape(), g, out_h, out_w);
}

template <typename Scalar>
struct ReluResult {
  Tensor<Scalar> output;
  std::uint64_t nonzero_count = 0;  // #{x > 0}, strict
  std::uint64_t total_count = 0;
};

template <typename Scalar>
ReluResult<Scalar> relu_forward(const Tensor<Scalar>& input) {
  ReluResult<Scalar> r;
  r.output = Tensor<Scalar>(input.shape(), input.values().max(Scalar(0)));
  r.nonzero_count =
      static_cast<std::uint64_t>((input.values() > Scalar(0)).count());
  r.total_count = static_cast<std::uint64_t>(input.size());
  return r;
}

template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& upstream,
                             const Tensor<Scalar>& output) {
  if (upstream.shape() != output.shape()) {
    throw ShapeError("relu backward shape mismatch");
  }
  return Tensor<Scalar>(
      output.shape(),
      (output.values() > Scalar(0)).select(upstream.values(), Scalar(0)));
}

template <typename Scalar>
struct MaxPoolResult {
  Tensor<Scalar> output;
  std::vector<Index> argmax;  // flat input index per output element
};

/// Ties resolve to the first maximum in row-major scan order.
template <typename Scalar>
MaxPoolResult<Scalar> maxpool_forward(const Tensor<Scalar>& input,
                                      const PoolGeometry& g) {
  detail::require_rank(input, 4, "maxpool input");
  const Index batch = input.dim(0), channels = input.dim(1);
  const Index height = input.dim(2), width = input.dim(3);
  const Index out_h = pool_output_size(height, g.window, g.stride);
  const Index out_w = pool_output_size(width, g.window, g.stride);
  MaxPoolResult<Scalar> r;
  r.output = Tensor<Scalar>({batch, channels, out_h, out_w});
  r.argmax.resize(static_cast<size_t>(r.output.size()));
  Index o = 0;
  for (Index bc = 0; bc < batch * channels; ++bc) {
    const Index base = bc * height * width;
    for (Index oy = 0; oy < out_h; ++oy) {
      for (Index ox = 0; ox < out_w; ++ox, ++o) {
        Index best = base + (oy * g.stride) * width + ox * g.stride;
        for (Index wy = 0; wy < g.window; ++wy) {
          for (Index wx = 0; wx < g.window; ++wx) {
            const Index idx =
                base + (oy * g.stride + wy) * width + ox * g.stride + wx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        r.output[o] = input[best];
        r.argmax[static_cast<size_t>(o)] = best;
      }
    }
  }
  return r;
}

template <typename Scalar>
Tensor<Scalar> maxpool_backward(const Tensor<Scalar>& upstream,
                                std::span<const Index> argmax,
                                const Shape& input_shape) {
  if (static_cast<Index>(argmax.size()) != upstream.size()) {
    throw ShapeError("maxpool backward: argmax/upstream size mismatch");
  }
  Tensor<Scalar> grad(input_shape);
  for (Index i = 0; i < upstream.size(); ++i) {
    grad[argmax[static_cast<size_t>(i)]] += upstream[i];
  }
  return grad;
}

template <typename Scalar>
Tensor<Scalar> avgpool_forward(const Tensor<Scalar>& input,
                               const PoolGeometry& g) {
  detail::require_rank(input, 4, "avgpool input");
  const Index batch = input.dim(0), channels = input.dim(1);
  const Index height = input.dim(2), width = input.dim(3);
  const Index out_h = pool_output_size(height, g.window, g.stride);
  const Index out_w = pool_output_size(width, g.window, g.stride);
  const Scalar scale = Scalar(1) / static_cast<Scalar>(g.window * g.window);
  Tensor<Scalar> out({batch, channels, out_h, out_w});
  Index o = 0;
  for (Index bc = 0; bc < batch * channels; ++bc) {
    const Scalar* src = input.data() + bc * height * width;
    for (Index oy = 0; oy < out_h; ++oy) {
      for (Index ox = 0; ox < out_w; ++ox, ++o) {
        Scalar sum(0);
        for (Index wy = 0; wy < g.window; ++wy) {
          for (Index wx = 0; wx < g.window; ++wx) {
            sum += src[(oy * g.stride + wy) * width + ox * g.stride + wx];
          }
        }
        out[o] = sum * scale;
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> avgpool_backward(const Tensor<Scalar>& upstream,
                                const Shape& input_shape,
                                const PoolGeometry& g) {
  Tensor<Scalar> grad(input_shape);
  const Index height = input_shape[2], width = input_shape[3];
  const Index out_h = upstream.dim(2), out_w = upstream.dim(3);
  const Scalar scale = Scalar(1) / static_cast<Scalar>(g.window * g.window);
  Index o = 0;
  for (Index bc = 0; bc < input_shape[0] * input_shape[1]; ++bc) {
    Scalar* dst = grad.data() + bc * height * width;
    for (Index oy = 0; oy < out_h; ++oy) {
      for (Index ox = 0; ox < out_w; ++ox, ++o) {
        const Scalar share = upstream[o] * scale;
        for (Index wy = 0; wy < g.window; ++wy) {
          for (Index wx = 0; wx < g.window; ++wx) {
            dst[(oy * g.stride + wy) * width + ox * g.stride + wx] += share;
          }
        }
      }
    }
  }
  return grad;
}

/// [B, ...] flattened to [B,F], times [C,F] weights -> [B,C].
template <typename Scalar>
Tensor<Scalar> fc_forward(const Tensor<Scalar>& input,
                          const LayerParams<Scalar>& params) {
  detail::require_rank(params.weights, 2, "fc weights");
  const Index batch = input.dim(0), features = input.stride0();
  const Index classes = params.weights.dim(0);
  if (params.weights.dim(1) != features) {
    throw ShapeError("fc weights " + shape_string(params.weights.shape()) +
                     " do not match input " + shape_string(input.shape()));
  }
  Tensor<Scalar> out({batch, classes});
  auto y = out.matrix(batch);
  y.noalias() = input.matrix(batch) * params.weights.matrix(classes).transpose();
  if (params.has_bias()) {
    y.rowwise() += params.bias.values().matrix().transpose();
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> fc_backward(const Tensor<Scalar>& upstream,
                           const Tensor<Scalar>& cached_input,
                           LayerParams<Scalar>& params) {
  detail::require_rank(upstream, 2, "fc upstream gradient");
  const Index batch = upstream.dim(0), classes = upstream.dim(1);
  if (cached_input.dim(0) != batch || classes != params.weights.dim(0)) {
    throw ShapeError("fc backward: upstream " + shape_string(upstream.shape()) +
                     " vs cached input " + shape_string(cached_input.shape()));
  }
  const auto dout = upstream.matrix(batch);
  params.grad_weights.matrix(classes).noalias() +=
      dout.transpose() * cached_input.matrix(batch);
  if (params.has_bias()) {
    params.grad_bias.values() += dout.colwise().sum().transpose().array();
  }
  Tensor<Scalar> grad(cached_input.shape());
  grad.matrix(batch).noalias() = dout * params.weights.matrix(classes);
  return grad;
}

template <typename Scalar>
struct XentResult {
  double loss = 0.0;  // mean over the batch
  Tensor<Scalar> logit_grad;
};

/// Mean softmax cross-entropy; gradient is (softmax - onehot) / B.
template <typename Scalar>
XentResult<Scalar> softmax_xent(const Tensor<Scalar>& logits,
                                std::span<const int> labels) {
  detail::require_rank(logits, 2, "softmax_xent logits");
  const Index batch = logits.dim(0), classes = logits.dim(1);
  if (static_cast<Index>(labels.size()) != batch) {
    throw ShapeError("softmax_xent: " + std::to_string(labels.size()) +
                     " labels for batch of " + std::to_string(batch));
  }
  XentResult<Scalar> r;
  r.logit_grad = Tensor<Scalar>(logits.shape());
  const auto z = logits.matrix(batch);
  auto grad = r.logit_grad.matrix(batch);
  double total = 0.0;
  for (Index b = 0; b < batch; ++b) {
    const int label = labels[static_cast<size_t>(b)];
    if (label < 0 || label >= classes) {
      throw ShapeError("label " + std::to_string(label) + " out of range");
    }
    const Scalar peak = z.row(b).maxCoeff();
    const auto shifted = (z.row(b).array() - peak).eval();
    const auto exps = shifted.exp().eval();
    const Scalar sum = exps.sum();
    total += static_cast<double>(std::log(sum) - shifted(label));
    grad.row(b) = (exps / sum).matrix();
    grad(b, label) -= Scalar(1);
  }
  grad /= static_cast<Scalar>(batch);
  r.loss = total / static_cast<double>(batch);
  return r;
}

template <typename Scalar>
std::vector<int> argmax_rows(const Tensor<Scalar>& logits) {
  const Index batch = logits.dim(0);
  const auto z = logits.matrix(batch);
  std::vector<int> out(static_cast<size_t>(batch));
  for (Index b = 0; b < batch; ++b) {
    Index best = 0;
    z.row(b).maxCoeff(&best);
    out[static_cast<size_t>(b)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace densiprune

#endif  // DENSIPRUNE_LAYERS_HPP
