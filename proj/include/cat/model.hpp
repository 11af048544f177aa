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
#include <string>
#include <vector>

#include "cat/entropy.hpp"
#include "cat/ops.hpp"
#include "cat/quantizer.hpp"
#include "cat/tensor.hpp"

namespace cat {

// toy-cnn-v1: conv(1->c1, 3x3, s2, p1) -> ReLU -> conv(c1->c2, 3x3, s2, p1)
// -> ReLU -> fc(->hidden) -> ReLU -> fc(->classes). Each ReLU output is an
// activation quantization site.
struct Architecture {
  static constexpr const char* kName = "toy-cnn-v1";

  std::size_t image_size = 16;
  std::size_t conv1_channels = 8;
  std::size_t conv2_channels = 16;
  std::size_t hidden = 64;
  std::size_t classes = 10;

  std::size_t conv1_side() const { return (image_size + 2 - 3) / 2 + 1; }
  std::size_t conv2_side() const { return (conv1_side() + 2 - 3) / 2 + 1; }
  std::size_t flat_features() const { return conv2_channels * conv2_side() * conv2_side(); }

  // "toy-cnn-v1 image=16 conv1=8 conv2=16 hidden=64 classes=10"
  std::string descriptor() const;
  static Architecture parse(const std::string& descriptor);

  bool operator==(const Architecture&) const = default;
};

enum class QuantMode {
  kFloat,      // plain float network, no clipping
  kQuantized,  // 8-bit weights, clipped and rounded activations
  kSurrogate,  // clip only, float weights; what the STE differentiates
};

struct ForwardResult {
  TensorPtr logits;
  // Clipped post-ReLU values per site (raw post-ReLU in float mode); the
  // entropy regularizer reads these.
  std::vector<SiteActivation> activations;
  // Values passed on to the next layer per site.
  std::vector<TensorPtr> site_outputs;
  std::vector<TensorPtr> pre_activations;
};

class Model {
 public:
  static constexpr std::size_t kNumSites = 3;

  Model(Architecture arch, int bits);

  // He-normal weights, zero biases, alpha = 1 on every site.
  static Model initialize(const Architecture& arch, int bits, std::uint64_t seed);

  const Architecture& architecture() const { return arch_; }
  int bits() const { return bits_; }

  // batch is [N x 1 x S x S].
  ForwardResult forward(Tape& tape, const Tensor& batch, QuantMode mode) const;

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  Parameter& parameter(const std::string& name);
  const Parameter& parameter(const std::string& name) const;

  std::size_t num_sites() const { return kNumSites; }
  QuantizerState site_state(std::size_t site) const;
  void set_alpha(std::size_t site, double alpha);
  void set_bits(int bits);
  // Applies project_alpha to every site.
  void project_alphas();

  // Deep copy; the copy shares no buffers with this model.
  Model clone() const;

 private:
  Architecture arch_;
  int bits_;
  std::vector<Parameter> params_;
};

}  // namespace cat
