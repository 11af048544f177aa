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

#include "cat/model.hpp"

#include <cmath>
#include <sstream>

#include "cat/errors.hpp"
#include "cat/rng.hpp"

namespace cat {
namespace {

const char* const kSiteAlpha[Model::kNumSites] = {"site0.alpha", "site1.alpha", "site2.alpha"};

Parameter make_param(std::string name, Shape shape, bool decay) {
  return Parameter{std::move(name), make_leaf(Tensor(std::move(shape)), true), {}, decay};
}

}  // namespace

std::string Architecture::descriptor() const {
  std::ostringstream out;
  out << kName << " image=" << image_size << " conv1=" << conv1_channels << " conv2=" << conv2_channels
      << " hidden=" << hidden << " classes=" << classes;
  return out.str();
}

Architecture Architecture::parse(const std::string& descriptor) {
  std::istringstream in(descriptor);
  std::string name;
  in >> name;
  if (name != kName) throw ConfigError("unknown architecture '" + name + "' (expected toy-cnn-v1)");
  Architecture arch;
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed architecture token '" + token + "'");
    const std::string key = token.substr(0, eq);
    std::size_t value = 0;
    try {
      value = std::stoul(token.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("architecture value for '" + key + "' is not an integer");
    }
    if (value == 0) throw ConfigError("architecture value for '" + key + "' must be positive");
    if (key == "image") arch.image_size = value;
    else if (key == "conv1") arch.conv1_channels = value;
    else if (key == "conv2") arch.conv2_channels = value;
    else if (key == "hidden") arch.hidden = value;
    else if (key == "classes") arch.classes = value;
    else throw ConfigError("unknown architecture key '" + key + "'");
  }
  if (arch.image_size < 2) throw ConfigError("architecture image size must be at least 2");
  return arch;
}

Model::Model(Architecture arch, int bits) : arch_(arch), bits_(bits) {
  if (bits < QuantizerState::kMinBits || bits > QuantizerState::kMaxBits) {
    throw ConfigError("bits must be in [1, 8], got " + std::to_string(bits));
  }
  params_.push_back(make_param("conv1.weight", {arch.conv1_channels, 1, 3, 3}, true));
  params_.push_back(make_param("conv1.bias", {arch.conv1_channels}, false));
  params_.push_back(make_param("conv2.weight", {arch.conv2_channels, arch.conv1_channels, 3, 3}, true));
  params_.push_back(make_param("conv2.bias", {arch.conv2_channels}, false));
  params_.push_back(make_param("fc1.weight", {arch.flat_features(), arch.hidden}, true));
  params_.push_back(make_param("fc1.bias", {arch.hidden}, false));
  params_.push_back(make_param("fc2.weight", {arch.hidden, arch.classes}, true));
  params_.push_back(make_param("fc2.bias", {arch.classes}, false));
  for (const char* name : kSiteAlpha) {
    Parameter p = make_param(name, {1}, false);
    (*p.value)[0] = 1.0;
    params_.push_back(std::move(p));
  }
}

Model Model::initialize(const Architecture& arch, int bits, std::uint64_t seed) {
  Model m(arch, bits);
  Rng rng(seed);
  for (Parameter& p : m.params_) {
    if (p.name.size() < 7 || p.name.compare(p.name.size() - 7, 7, ".weight") != 0) continue;
    const Shape& s = p.value->shape();
    // fan-in: C*kh*kw for conv kernels, rows for fc matrices
    const std::size_t fan_in = s.size() == 4 ? s[1] * s[2] * s[3] : s[0];
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& w : p.value->data()) w = stddev * rng.normal();
  }
  return m;
}

Parameter& Model::parameter(const std::string& name) {
  for (Parameter& p : params_) {
    if (p.name == name) return p;
  }
  throw InputError("model has no parameter '" + name + "'");
}

const Parameter& Model::parameter(const std::string& name) const {
  return const_cast<Model*>(this)->parameter(name);
}

QuantizerState Model::site_state(std::size_t site) const {
  return QuantizerState(parameter(kSiteAlpha[site]).value->item(), bits_);
}

void Model::set_alpha(std::size_t site, double alpha) { (*parameter(kSiteAlpha[site]).value)[0] = project_alpha(alpha); }

void Model::set_bits(int bits) {
  if (bits < QuantizerState::kMinBits || bits > QuantizerState::kMaxBits) {
    throw ConfigError("bits must be in [1, 8], got " + std::to_string(bits));
  }
  bits_ = bits;
}

void Model::project_alphas() {
  for (const char* name : kSiteAlpha) {
    double& a = (*parameter(name).value)[0];
    a = project_alpha(a);
  }
}

Model Model::clone() const {
  Model copy(arch_, bits_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor t = params_[i].value->detached();
    t.set_requires_grad(true);
    copy.params_[i].value = make_tensor(std::move(t));
    copy.params_[i].velocity = params_[i].velocity;
  }
  return copy;
}

ForwardResult Model::forward(Tape& tape, const Tensor& batch, QuantMode mode) const {
  const std::size_t side = arch_.image_size;
  if (batch.rank() != 4 || batch.dim(1) != 1 || batch.dim(2) != side || batch.dim(3) != side) {
    throw InputError("forward: batch " + shape_string(batch.shape()) + " does not match architecture input [Nx1x" +
                     std::to_string(side) + "x" + std::to_string(side) + "]");
  }
  const std::size_t n = batch.dim(0);
  ForwardResult result;

  auto weight = [&](const char* name) {
    const TensorPtr& master = parameter(name).value;
    return mode == QuantMode::kQuantized ? quantized_weight_view(tape, master) : master;
  };
  auto bias = [&](const char* name) { return parameter(name).value; };
  auto site = [&](std::size_t index, const TensorPtr& pre) {
    result.pre_activations.push_back(pre);
    TensorPtr post = relu(tape, pre);
    const QuantizerState qs = site_state(index);
    if (mode == QuantMode::kFloat) {
      result.activations.push_back({post, qs.levels()});
      result.site_outputs.push_back(post);
      return post;
    }
    result.activations.push_back({clip_activation(tape, post, qs.alpha()), qs.levels()});
    const auto qmode = mode == QuantMode::kQuantized ? ActivationQuantMode::kRound : ActivationQuantMode::kClipOnly;
    TensorPtr out = quantize_activation(tape, post, parameter(kSiteAlpha[index]).value, bits_, qmode);
    result.site_outputs.push_back(out);
    return out;
  };

  const TensorPtr input = make_tensor(batch.detached());
  TensorPtr x = conv2d(tape, input, weight("conv1.weight"), {2, 1});
  x = site(0, add_channel_bias(tape, x, bias("conv1.bias")));
  x = conv2d(tape, x, weight("conv2.weight"), {2, 1});
  x = site(1, add_channel_bias(tape, x, bias("conv2.bias")));
  x = reshape(tape, x, {n, arch_.flat_features()});
  x = site(2, add_bias(tape, matmul(tape, x, weight("fc1.weight")), bias("fc1.bias")));
  result.logits = add_bias(tape, matmul(tape, x, weight("fc2.weight")), bias("fc2.bias"));
  return result;
}

}  // namespace cat
