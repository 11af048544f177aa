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
#include <span>
#include <vector>

#include "cat/tensor.hpp"

namespace cat {

// Differentiable operations. Each takes the tape it records onto; on an
// inference tape (or when no input requires a gradient) nothing is recorded.

// [m x k] * [k x n] -> [m x n].
TensorPtr matmul(Tape& tape, const TensorPtr& a, const TensorPtr& b);

// Adds bias[n] to every row of x[m x n].
TensorPtr add_bias(Tape& tape, const TensorPtr& x, const TensorPtr& bias);

struct Conv2dParams {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

// Cross-correlation of x[N x C x H x W] with w[F x C x kh x kw], zero padded.
TensorPtr conv2d(Tape& tape, const TensorPtr& x, const TensorPtr& w, Conv2dParams params);

// Adds bias[C] to every spatial position of channel c of x[N x C x H x W].
TensorPtr add_channel_bias(Tape& tape, const TensorPtr& x, const TensorPtr& bias);

// max(0, x); the backward mask is x > 0, so the gradient at exactly 0 is 0.
TensorPtr relu(Tape& tape, const TensorPtr& x);

TensorPtr reshape(Tape& tape, const TensorPtr& x, Shape shape);

// Elementwise a + b for equal shapes.
TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b);

TensorPtr scale(Tape& tape, const TensorPtr& x, double factor);

// Sum of all elements, as a scalar.
TensorPtr sum(Tape& tape, const TensorPtr& x);

// Mean over the batch of -log softmax(logits)[label]; logits are [N x K].
TensorPtr softmax_cross_entropy(Tape& tape, const TensorPtr& logits, std::span<const int> labels);

// Trainable tensor plus its momentum buffer.
struct Parameter {
  std::string name;
  TensorPtr value;
  std::vector<double> velocity;
  bool decay = true;
};

struct SgdOptions {
  double lr = 1e-4;
  double momentum = 0.9;
  double weight_decay = 4e-5;
};

// v <- m*v + (g + wd*theta); theta <- theta - lr*v. Parameters without a
// gradient buffer are treated as having zero gradient.
void sgd_step(std::span<Parameter> params, const SgdOptions& options);

void zero_grads(std::span<Parameter> params);

}  // namespace cat
