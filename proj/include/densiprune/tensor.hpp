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

#ifndef DENSIPRUNE_TENSOR_HPP
#define DENSIPRUNE_TENSOR_HPP

#include <Eigen/Dense>

#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "densiprune/errors.hpp"

namespace densiprune {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape);

// Dense row-major (NCHW for 4-D) tensor. Values live in one contiguous Eigen
// array; matrix() exposes row-major views for GEMM-style kernels.
template <typename Scalar>
class Tensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

  Tensor() = default;

  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), values_(Array::Zero(shape_size(shape_))) {}

  Tensor(Shape shape, Array values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_size(shape_)) {
      throw ShapeError("tensor of shape " + shape_string(shape_) + " given " +
                       std::to_string(values_.size()) + " values");
    }
  }

  static Tensor constant(Shape shape, Scalar value) {
    Tensor t(std::move(shape));
    t.values_.setConstant(value);
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const { return shape_.at(static_cast<size_t>(axis)); }
  Index size() const { return values_.size(); }
  bool empty() const { return values_.size() == 0; }

  Array& values() { return values_; }
  const Array& values() const { return values_; }
  Scalar* data() { return values_.data(); }
  const Scalar* data() const { return values_.data(); }

  Scalar& operator[](Index i) { return values_[i]; }
  Scalar operator[](Index i) const { return values_[i]; }

  /// Row-major view with `rows` rows over the whole buffer.
  MatrixMap matrix(Index rows) {
    return MatrixMap(values_.data(), rows, rows ? size() / rows : 0);
  }
  ConstMatrixMap matrix(Index rows) const {
    return ConstMatrixMap(values_.data(), rows, rows ? size() / rows : 0);
  }

  /// Elements per leading-axis slice (one sample of a batch).
  Index stride0() const { return shape_.empty() ? 0 : size() / shape_[0]; }

  void reshape(Shape shape) {
    if (shape_size(shape) != size()) {
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " +
                       shape_string(shape));
    }
    shape_ = std::move(shape);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, values_.template cast<Other>());
  }

  bool all_finite() const { return values_.allFinite(); }

 private:
  Shape shape_;
  Array values_;
};

template <typename Scalar>
void ensure_finite(const Tensor<Scalar>& t, const std::string& what) {
  if (!t.all_finite()) {
    throw NumericError("non-finite values in " + what);
  }
}

}  // namespace densiprune

#endif  // DENSIPRUNE_TENSOR_HPP
