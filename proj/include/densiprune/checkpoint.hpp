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

// Binary model checkpoint: the architecture text plus every parameter tensor
// in network order. Layout is documented in docs/FORMATS.md.

#ifndef DENSIPRUNE_CHECKPOINT_HPP
#define DENSIPRUNE_CHECKPOINT_HPP

#include <filesystem>
#include <string>

#include "densiprune/network.hpp"

namespace densiprune {

std::string serialize_checkpoint(const Network<float>& model);
Network<float> deserialize_checkpoint(const std::string& bytes);

/// Written to a temporary name and renamed into place.
void save_checkpoint(const Network<float>& model,
                     const std::filesystem::path& path);
Network<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace densiprune

#endif  // DENSIPRUNE_CHECKPOINT_HPP
