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

#include "cat/rng.hpp"
#include "cat/tensor.hpp"

namespace cat {

// Occurrence counts of each quantization level.
struct Histogram {
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const;
  std::size_t num_symbols() const { return counts.size(); }
  std::size_t present_symbols() const;

  static Histogram of(std::span<const std::uint16_t> symbols, std::size_t num_symbols);
  void add(std::span<const std::uint16_t> symbols);
};

// H = -sum p_i log2 p_i in bits per symbol. Throws InputError when empty.
double empirical_entropy(const Histogram& h);

// softmax(-T * |x - q|) over the levels q.
std::vector<double> soft_assignment(double x, std::span<const double> levels, double temperature);

struct SoftEntropyConfig {
  double temperature = 10.0;
  double subsample_fraction = 0.25;

  void validate() const;
};

// Indices of max(1, round(fraction * n)) distinct elements, drawn with rng.
std::vector<std::size_t> draw_subsample(std::size_t n, double fraction, Rng& rng);

// Differentiable entropy estimate in bits over a random subset of the
// elements of x: p_i = mean_j Q_i(x_j), H = -sum p_i log2 p_i. Levels are
// constants; the gradient flows to x only.
TensorPtr soft_entropy(Tape& tape, const TensorPtr& x, std::span<const double> levels, const SoftEntropyConfig& cfg,
                       Rng& rng);

// ||x||_1 / ||x||_2, defined as 0 (with zero gradient) when ||x||_2 < 1e-12.
TensorPtr compressibility_loss(Tape& tape, const TensorPtr& x);

enum class EntropyLossMode { kSoftEntropy, kCompressibility };

std::string to_string(EntropyLossMode mode);
EntropyLossMode parse_entropy_loss_mode(const std::string& text);

// One activation site: its (clipped) values and the level set used by the
// soft-entropy mode.
struct SiteActivation {
  TensorPtr values;
  std::vector<double> levels;
};

// Sum over sites of the per-site loss, optionally scaled by per-site weights
// (empty weights = unweighted sum). Throws ConfigError on an empty site list.
TensorPtr network_entropy_loss(Tape& tape, std::span<const SiteActivation> sites, EntropyLossMode mode,
                               const SoftEntropyConfig& cfg, Rng& rng, std::span<const double> weights = {});

}  // namespace cat
