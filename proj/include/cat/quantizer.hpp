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
#include <vector>

#include "cat/tensor.hpp"

namespace cat {

// Uniform activation quantizer on [0, alpha] with 2^bits levels.
class QuantizerState {
 public:
  static constexpr double kMinAlpha = 1e-3;
  static constexpr int kMinBits = 1;
  static constexpr int kMaxBits = 8;

  QuantizerState(double alpha, int bits);

  double alpha() const { return alpha_; }
  int bits() const { return bits_; }
  std::size_t num_levels() const { return std::size_t{1} << bits_; }
  double step() const { return alpha_ / static_cast<double>(num_levels() - 1); }

  // q_i = alpha * i / (L - 1); the last level is alpha exactly.
  double level(std::size_t i) const;
  std::vector<double> levels() const;

  // Index of the level nearest to clamp(x, 0, alpha); midpoint ties go to
  // the higher index.
  std::size_t nearest_index(double x) const;

 private:
  double alpha_;
  int bits_;
};

// Clamps alpha into the admissible range after an optimizer step.
double project_alpha(double alpha);

// Element-wise clip to [0, alpha] and snap to the nearest level.
Tensor quantize_activation(const Tensor& x, const QuantizerState& qs);

struct SteGradients {
  Tensor dx;
  double dalpha = 0.0;
};

// Straight-through estimator: dx = dy on the open interval (0, alpha), zero
// elsewhere; dalpha collects dy over the saturated set x >= alpha.
SteGradients quantize_backward_ste(const Tensor& dy, const Tensor& x, const QuantizerState& qs);

enum class ActivationQuantMode {
  kRound,      // clip then snap to levels (deployment forward)
  kClipOnly,   // clip only: the differentiable surrogate of kRound
};

// Tape op for an activation site. `alpha` is a learnable scalar tensor.
// Backward follows quantize_backward_ste in both modes.
TensorPtr quantize_activation(Tape& tape, const TensorPtr& x, const TensorPtr& alpha, int bits,
                              ActivationQuantMode mode);

// clamp(x, 0, alpha) with gradient to x only; alpha is held constant.
TensorPtr clip_activation(Tape& tape, const TensorPtr& x, double alpha);

// Symmetric per-tensor 8-bit quantization of a full-precision weight tensor.
struct QuantizedWeights {
  Shape shape;
  std::vector<std::int8_t> codes;
  double scale = 1.0;

  Tensor dequantize() const;
};

// scale = max|w| / 127, or 1 for an all-zero tensor.
QuantizedWeights quantize_weights(const Tensor& master);

// Forward value is dequantize(quantize_weights(master)); the backward pass
// hands gradients straight through to the master copy.
TensorPtr quantized_weight_view(Tape& tape, const TensorPtr& master);

// Level indices of an already-quantized tensor.
struct IndexTensor {
  Shape shape;
  std::vector<std::uint16_t> indices;
};

// Throws InternalConsistencyError if an element is further than 1e-12 from
// every level.
IndexTensor symbol_indices(const Tensor& xq, const QuantizerState& qs);

// Nearest-rank percentile of |values|, projected to at least kMinAlpha.
double calibrate_alpha(std::span<const double> pre_activations, double percentile = 0.999);

}  // namespace cat
