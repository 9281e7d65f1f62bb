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

#include "densiprune/data.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "densiprune/errors.hpp"

namespace densiprune {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr Index kCifarSide = 32;
constexpr Index kCifarRecord = 1 + 3 * kCifarSide * kCifarSide;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > buf.size()) {
    throw FormatError("truncated IDX header in " + path.string());
  }
  return (std::uint32_t{buf[offset]} << 24) |
         (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void check_norm(const Normalization& norm, Index channels) {
  if (static_cast<Index>(norm.mean.size()) != channels ||
      static_cast<Index>(norm.stddev.size()) != channels) {
    throw ConfigError(fmt::format("normalization needs {} mean/std values",
                                  channels));
  }
  for (float s : norm.stddev) {
    if (!(s > 0.0f)) throw ConfigError("normalization std must be > 0");
  }
}

// Explicit Fisher-Yates so orders do not depend on the standard library's
// shuffle implementation.
void seeded_shuffle(std::vector<Index>& v, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  for (size_t i = v.size(); i-- > 1;) {
    const auto j = static_cast<size_t>(engine() % (i + 1));
    std::swap(v[i], v[j]);
  }
}

}  // namespace

void normalize_in_place(Tensor<float>& images, const Normalization& norm) {
  const Index channels = images.dim(1);
  check_norm(norm, channels);
  const Index plane = images.dim(2) * images.dim(3);
  for (Index b = 0; b < images.dim(0); ++b) {
    for (Index c = 0; c < channels; ++c) {
      auto seg = images.values().segment((b * channels + c) * plane, plane);
      seg = (seg - norm.mean[static_cast<size_t>(c)]) /
            norm.stddev[static_cast<size_t>(c)];
    }
  }
}

void denormalize_in_place(Tensor<float>& images, const Normalization& norm) {
  const Index channels = images.dim(1);
  check_norm(norm, channels);
  const Index plane = images.dim(2) * images.dim(3);
  for (Index b = 0; b < images.dim(0); ++b) {
    for (Index c = 0; c < channels; ++c) {
      auto seg = images.values().segment((b * channels + c) * plane, plane);
      seg = seg * norm.stddev[static_cast<size_t>(c)] +
            norm.mean[static_cast<size_t>(c)];
    }
  }
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, int num_classes,
                 const Normalization& norm) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  if (read_be32(img, 0, images_path) != kIdxImagesMagic) {
    throw FormatError("bad magic in IDX images file " + images_path.string());
  }
  if (read_be32(lab, 0, labels_path) != kIdxLabelsMagic) {
    throw FormatError("bad magic in IDX labels file " + labels_path.string());
  }
  const Index count = read_be32(img, 4, images_path);
  const Index rows = read_be32(img, 8, images_path);
  const Index cols = read_be32(img, 12, images_path);
  const Index label_count = read_be32(lab, 4, labels_path);
  if (count != label_count) {
    throw FormatError(fmt::format("IDX image count {} != label count {}",
                                  count, label_count));
  }
  const size_t pixels = static_cast<size_t>(count * rows * cols);
  if (img.size() < 16 + pixels) {
    throw FormatError("truncated IDX images file " + images_path.string());
  }
  if (lab.size() < 8 + static_cast<size_t>(count)) {
    throw FormatError("truncated IDX labels file " + labels_path.string());
  }

  Dataset d;
  d.name = images_path.stem().string();
  d.num_classes = num_classes;
  d.images = Tensor<float>({count, 1, rows, cols});
  for (size_t i = 0; i < pixels; ++i) {
    d.images[static_cast<Index>(i)] = static_cast<float>(img[16 + i]) / 255.0f;
  }
  d.labels.resize(static_cast<size_t>(count));
  for (Index i = 0; i < count; ++i) {
    const int label = lab[8 + static_cast<size_t>(i)];
    if (label >= num_classes) {
      throw FormatError(fmt::format("label {} >= {} classes in {}", label,
                                    num_classes, labels_path.string()));
    }
    d.labels[static_cast<size_t>(i)] = label;
  }
  normalize_in_place(d.images, norm);
  return d;
}

Dataset load_cifar_binary(std::span<const std::filesystem::path> paths,
                          int num_classes, const Normalization& norm) {
  std::vector<std::vector<std::uint8_t>> files;
  Index count = 0;
  for (const auto& p : paths) {
    files.push_back(read_file(p));
    const auto size = static_cast<Index>(files.back().size());
    if (size % kCifarRecord != 0) {
      throw FormatError(fmt::format("{}: length {} is not a multiple of {}",
                                    p.string(), size, kCifarRecord));
    }
    count += size / kCifarRecord;
  }
  Dataset d;
  d.name = paths.empty() ? "cifar" : paths.front().stem().string();
  d.num_classes = num_classes;
  d.images = Tensor<float>({count, 3, kCifarSide, kCifarSide});
  d.labels.reserve(static_cast<size_t>(count));
  const Index pixels = kCifarRecord - 1;
  Index n = 0;
  for (size_t f = 0; f < files.size(); ++f) {
    const auto& buf = files[f];
    for (size_t off = 0; off < buf.size(); off += kCifarRecord, ++n) {
      const int label = buf[off];
      if (label >= num_classes) {
        throw FormatError(fmt::format("{}: label byte {} >= {} classes",
                                      paths[f].string(), label, num_classes));
      }
      d.labels.push_back(label);
      for (Index i = 0; i < pixels; ++i) {
        d.images[n * pixels + i] =
            static_cast<float>(buf[off + 1 + static_cast<size_t>(i)]) / 255.0f;
      }
    }
  }
  normalize_in_place(d.images, norm);
  return d;
}

Dataset subset(const Dataset& d, Index n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
  std::vector<std::vector<Index>> by_class(static_cast<size_t>(d.num_classes));
  for (Index i = 0; i < d.count(); ++i) {
    by_class[static_cast<size_t>(d.labels[static_cast<size_t>(i)])].push_back(i);
  }
  std::vector<Index> chosen;
  for (size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (static_cast<Index>(idx.size()) < n_per_class) {
      throw ConfigError(fmt::format("class {} has {} samples, {} requested", c,
                                    idx.size(), n_per_class));
    }
    seeded_shuffle(idx, seed + c);
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + n_per_class);
  }
  std::sort(chosen.begin(), chosen.end());

  Dataset out;
  out.name = d.name + "-subset";
  out.num_classes = d.num_classes;
  const Index per = d.images.stride0();
  Shape shape = d.images.shape();
  shape[0] = static_cast<Index>(chosen.size());
  out.images = Tensor<float>(shape);
  for (size_t k = 0; k < chosen.size(); ++k) {
    out.images.values().segment(static_cast<Index>(k) * per, per) =
        d.images.values().segment(chosen[k] * per, per);
    out.labels.push_back(d.labels[static_cast<size_t>(chosen[k])]);
  }
  return out;
}

BatchPlan BatchPlan::shuffled(Index count, Index batch_size,
                              std::uint64_t epoch_seed) {
  BatchPlan plan = sequential(count, batch_size);
  plan.epoch_seed = epoch_seed;
  seeded_shuffle(plan.order, epoch_seed);
  return plan;
}

BatchPlan BatchPlan::sequential(Index count, Index batch_size) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  BatchPlan plan;
  plan.batch_size = batch_size;
  plan.order.resize(static_cast<size_t>(count));
  std::iota(plan.order.begin(), plan.order.end(), Index{0});
  return plan;
}

BatchSequence::BatchSequence(const Dataset& d, BatchPlan plan)
    : data_(&d), plan_(std::move(plan)) {
  if (plan_.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (static_cast<Index>(plan_.order.size()) != d.count()) {
    throw ConfigError("batch plan does not cover the dataset");
  }
  batches_ = (d.count() + plan_.batch_size - 1) / plan_.batch_size;
}

Batch BatchSequence::operator[](Index i) const {
  const Index begin = i * plan_.batch_size;
  const Index end = std::min(begin + plan_.batch_size, data_->count());
  Batch b;
  Shape shape = data_->images.shape();
  shape[0] = end - begin;
  b.images = Tensor<float>(shape);
  const Index per = data_->images.stride0();
  for (Index k = begin; k < end; ++k) {
    const Index src = plan_.order[static_cast<size_t>(k)];
    b.images.values().segment((k - begin) * per, per) =
        data_->images.values().segment(src * per, per);
    b.labels.push_back(data_->labels[static_cast<size_t>(src)]);
    b.indices.push_back(src);
  }
  return b;
}

BatchSequence batches(const Dataset& d, BatchPlan plan) {
  return BatchSequence(d, std::move(plan));
}

}  // namespace densiprune
