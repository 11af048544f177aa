/* Copyright 2026 The CAT Codec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cat/tensor.hpp"

namespace cat {

// Single-channel images in [0, 1] with integer class labels.
struct Dataset {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t classes = 10;
  std::vector<double> pixels;  // N x H x W, row-major
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t image_elements() const { return height * width; }
  bool empty() const { return labels.empty(); }

  // Copies the selected images into an [n x 1 x H x W] tensor.
  Tensor batch(std::span<const std::size_t> indices) const;
  std::vector<int> batch_labels(std::span<const std::size_t> indices) const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

struct SyntheticOptions {
  std::size_t samples = 5000;
  std::size_t image_size = 16;
  double noise = 0.15;
};

// Ten classes of oriented bars (class k at k * 18 degrees) with random
// offset, angle jitter and pixel noise. Pixels are snapped to multiples of
// 1/255 so the tensors match what a CSV export would reload.
Dataset make_synthetic(std::uint64_t seed, const SyntheticOptions& options = {});

// One row per image, `label,p0,...,p(H*W-1)` with pixels in [0, 255]. A
// first line whose label field is not an integer is treated as a header.
// Images must be square. Throws ParseError naming the line.
Dataset load_csv(const std::string& path, std::size_t classes = 10);
void write_csv(const Dataset& data, const std::string& path);

// "synthetic" or a CSV path.
Dataset load_dataset(const std::string& source, std::uint64_t seed, const SyntheticOptions& options = {});

struct DataSplit {
  Dataset train;
  Dataset validation;
};

// Deterministic shuffle, then the last `validation_fraction` of the order is
// held out.
DataSplit split_dataset(const Dataset& data, double validation_fraction, std::uint64_t seed);

}  // namespace cat
