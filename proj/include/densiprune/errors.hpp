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

#ifndef DENSIPRUNE_ERRORS_HPP
#define DENSIPRUNE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace densiprune {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (dataset, architecture text, checkpoint).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration or unreadable path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Architecture that cannot be built: spatial collapse, bad AE vector, etc.
class ArchError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes that do not line up inside a layer.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf appeared during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// API used out of order (e.g. backward without a forward cache).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace densiprune

#endif  // DENSIPRUNE_ERRORS_HPP
