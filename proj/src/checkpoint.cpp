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

#include "densiprune/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <boost/crc.hpp>
#include <fmt/format.h>

namespace densiprune {

namespace {

constexpr char kMagic[4] = {'D', 'P', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
constexpr size_t kHeaderSize = 4 + 4 + 8 + 4 + 4;

template <typename T>
void put(std::string& out, T value) {
  for (size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes, size_t pos = 0)
      : bytes_(bytes), pos_(pos) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i]))
               << (8 * i);
    }
    pos_ += sizeof(T);
    return value;
  }

  std::string take(size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(size_t n) const {
    if (remaining() < n) throw FormatError("checkpoint is truncated");
  }

  const std::string& bytes_;
  size_t pos_;
};

std::uint32_t crc32(const char* data, size_t n) {
  boost::crc_32_type crc;
  crc.process_bytes(data, n);
  return crc.checksum();
}

}  // namespace

std::string serialize_checkpoint(const Network<float>& model) {
  std::string payload;
  const std::string arch = to_text(model.arch());
  put<std::uint32_t>(payload, static_cast<std::uint32_t>(arch.size()));
  payload += arch;

  std::vector<const Tensor<float>*> tensors;
  model.for_each_params([&](const LayerParams<float>& p) {
    tensors.push_back(&p.weights);
    if (p.has_bias()) tensors.push_back(&p.bias);
  });
  put<std::uint32_t>(payload, static_cast<std::uint32_t>(tensors.size()));
  for (const auto* t : tensors) {
    put<std::uint64_t>(payload, static_cast<std::uint64_t>(t->size()));
    for (Index i = 0; i < t->size(); ++i) {
      put<std::uint32_t>(payload, std::bit_cast<std::uint32_t>((*t)[i]));
    }
  }

  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, payload.size());
  put<std::uint32_t>(out, crc32(payload.data(), payload.size()));
  put<std::uint32_t>(out, 0);
  return out + payload;
}

Network<float> deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a densiprune checkpoint (bad magic)");
  }
  Reader header(bytes, 4);
  const auto version = header.get<std::uint32_t>();
  if (version != kVersion) {
    throw FormatError(fmt::format("unsupported checkpoint version {}", version));
  }
  const auto payload_size = header.get<std::uint64_t>();
  const auto crc = header.get<std::uint32_t>();
  header.get<std::uint32_t>();
  if (bytes.size() - kHeaderSize != payload_size) {
    throw FormatError("checkpoint payload size does not match header");
  }
  if (crc32(bytes.data() + kHeaderSize, payload_size) != crc) {
    throw FormatError("checkpoint CRC mismatch");
  }

  Reader r(bytes, kHeaderSize);
  const auto arch_len = r.get<std::uint32_t>();
  const ArchSpec arch = parse_arch(r.take(arch_len));
  Network<float> model = Network<float>::instantiate(arch, 0);

  const auto count = r.get<std::uint32_t>();
  std::vector<Tensor<float>*> tensors;
  model.for_each_params([&](LayerParams<float>& p) {
    tensors.push_back(&p.weights);
    if (p.has_bias()) tensors.push_back(&p.bias);
  });
  if (count != tensors.size()) {
    throw FormatError(fmt::format("checkpoint holds {} tensors, arch needs {}",
                                  count, tensors.size()));
  }
  for (auto* t : tensors) {
    const auto n = r.get<std::uint64_t>();
    if (n != static_cast<std::uint64_t>(t->size())) {
      throw FormatError("checkpoint tensor size does not match arch");
    }
    for (Index i = 0; i < t->size(); ++i) {
      (*t)[i] = std::bit_cast<float>(r.get<std::uint32_t>());
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in checkpoint");
  return model;
}

void save_checkpoint(const Network<float>& model,
                     const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + tmp.string());
    const std::string bytes = serialize_checkpoint(model);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Network<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace densiprune
