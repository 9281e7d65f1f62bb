#!/usr/bin/env python3
# Copyright 2026 The densiprune Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the scikit-learn 8x8 handwritten digits as MNIST-style IDX files.

Train/test split is stratified and fixed (first 140 samples of each class in
the original order go to train, the rest to test), so the output is
byte-identical on every run.
"""
import argparse
import pathlib
import struct

import numpy as np
from sklearn.datasets import load_digits


def write_images(path, images):
    count, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, count, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="data/digits")
    parser.add_argument("--train-per-class", type=int, default=140)
    args = parser.parse_args()

    digits = load_digits()
    # 0..16 intensities scaled to the 0..255 byte range.
    images = np.rint(digits.images * (255.0 / 16.0)).astype(np.uint8)
    labels = digits.target.astype(np.uint8)

    train_idx, test_idx = [], []
    seen = np.zeros(10, dtype=int)
    for i, label in enumerate(labels):
        if seen[label] < args.train_per_class:
            train_idx.append(i)
            seen[label] += 1
        else:
            test_idx.append(i)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", images[train_idx])
    write_labels(out / "train-labels-idx1-ubyte", labels[train_idx])
    write_images(out / "test-images-idx3-ubyte", images[test_idx])
    write_labels(out / "test-labels-idx1-ubyte", labels[test_idx])
    print(f"train={len(train_idx)} test={len(test_idx)}")


if __name__ == "__main__":
    main()
