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

#include "cat/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cat/errors.hpp"

namespace cat {

QuantizerState::QuantizerState(double alpha, int bits) : alpha_(alpha), bits_(bits) {
  if (bits < kMinBits || bits > kMaxBits) {
    throw ConfigError("quantizer bit-width must be in [1, 8], got " + std::to_string(bits));
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("quantizer clip alpha must be positive and finite, got " + std::to_string(alpha));
  }
}

double QuantizerState::level(std::size_t i) const {
  const double top = static_cast<double>(num_levels() - 1);
  return alpha_ * (static_cast<double>(i) / top);
}

std::vector<double> QuantizerState::levels() const {
  std::vector<double> out(num_levels());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = level(i);
  return out;
}

std::size_t QuantizerState::nearest_index(double x) const {
  const double c = std::clamp(x, 0.0, alpha_);
  const std::size_t last = num_levels() - 1;
  const double guess = std::floor(c / step());
  const std::size_t base = static_cast<std::size_t>(std::clamp(guess, 0.0, static_cast<double>(last)));
  // Division rounding can misplace the guess by one bucket; scan neighbours.
  const std::size_t lo = base > 0 ? base - 1 : 0;
  const std::size_t hi = std::min(base + 2, last);
  std::size_t best = lo;
  double best_dist = std::abs(c - level(lo));
  for (std::size_t i = lo + 1; i <= hi; ++i) {
    const double d = std::abs(c - level(i));
    if (d <= best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

double project_alpha(double alpha) { return std::max(alpha, QuantizerState::kMinAlpha); }

Tensor quantize_activation(const Tensor& x, const QuantizerState& qs) {
  Tensor out(x.shape());
  auto xs = x.data();
  auto os = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) os[i] = qs.level(qs.nearest_index(xs[i]));
  return out;
}

SteGradients quantize_backward_ste(const Tensor& dy, const Tensor& x, const QuantizerState& qs) {
  if (dy.shape() != x.shape()) {
    throw DimensionError("quantize_backward_ste: gradient " + shape_string(dy.shape()) + " vs input " +
                         shape_string(x.shape()));
  }
  SteGradients out{Tensor(x.shape()), 0.0};
  auto g = dy.data();
  auto xs = x.data();
  auto dx = out.dx.data();
  const double alpha = qs.alpha();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] > 0.0 && xs[i] < alpha) {
      dx[i] = g[i];
    } else if (xs[i] >= alpha) {
      out.dalpha += g[i];
    }
  }
  return out;
}

TensorPtr quantize_activation(Tape& tape, const TensorPtr& x, const TensorPtr& alpha, int bits,
                              ActivationQuantMode mode) {
  const QuantizerState qs(alpha->item(), bits);
  TensorPtr out;
  if (mode == ActivationQuantMode::kRound) {
    out = make_tensor(quantize_activation(*x, qs));
  } else {
    out = make_tensor(Tensor(x->shape()));
    auto xs = x->data();
    auto os = out->data();
    for (std::size_t i = 0; i < xs.size(); ++i) os[i] = std::clamp(xs[i], 0.0, qs.alpha());
  }
  const bool rec = tape.recording() && (x->requires_grad() || alpha->requires_grad());
  out->set_requires_grad(rec);
  if (rec) {
    tape.record(mode == ActivationQuantMode::kRound ? "quantize_activation" : "clip_surrogate",
                [x, alpha, out, qs] {
                  if (!out->has_grad()) return;
                  Tensor dy(out->shape(), std::vector<double>(out->grad().begin(), out->grad().end()));
                  SteGradients ste = quantize_backward_ste(dy, *x, qs);
                  if (x->requires_grad()) {
                    auto dx = x->grad();
                    auto src = ste.dx.data();
                    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += src[i];
                  }
                  if (alpha->requires_grad()) alpha->grad()[0] += ste.dalpha;
                });
  }
  return out;
}

TensorPtr clip_activation(Tape& tape, const TensorPtr& x, double alpha) {
  auto out = make_tensor(Tensor(x->shape()));
  auto xs = x->data();
  auto os = out->data();
  for (std::size_t i = 0; i < xs.size(); ++i) os[i] = std::clamp(xs[i], 0.0, alpha);
  const bool rec = tape.recording() && x->requires_grad();
  out->set_requires_grad(rec);
  if (rec) {
    tape.record("clip_activation", [x, out, alpha] {
      if (!out->has_grad()) return;
      auto g = out->grad();
      auto xs = x->data();
      auto dx = x->grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (xs[i] > 0.0 && xs[i] < alpha) dx[i] += g[i];
      }
    });
  }
  return out;
}

Tensor QuantizedWeights::dequantize() const {
  Tensor out(shape);
  auto os = out.data();
  for (std::size_t i = 0; i < codes.size(); ++i) os[i] = static_cast<double>(codes[i]) * scale;
  return out;
}

QuantizedWeights quantize_weights(const Tensor& master) {
  QuantizedWeights q;
  q.shape = master.shape();
  q.codes.resize(master.size());
  double max_abs = 0.0;
  for (double v : master.data()) {
    if (!std::isfinite(v)) throw InputError("quantize_weights: non-finite master weight");
    max_abs = std::max(max_abs, std::abs(v));
  }
  q.scale = max_abs > 0.0 ? max_abs / 127.0 : 1.0;
  auto ws = master.data();
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const double r = std::clamp(std::round(ws[i] / q.scale), -127.0, 127.0);
    q.codes[i] = static_cast<std::int8_t>(r);
  }
  return q;
}

TensorPtr quantized_weight_view(Tape& tape, const TensorPtr& master) {
  auto out = make_tensor(quantize_weights(*master).dequantize());
  const bool rec = tape.recording() && master->requires_grad();
  out->set_requires_grad(rec);
  if (rec) {
    tape.record("quantized_weight_view", [master, out] {
      if (!out->has_grad()) return;
      auto g = out->grad();
      auto dm = master->grad();
      for (std::size_t i = 0; i < g.size(); ++i) dm[i] += g[i];
    });
  }
  return out;
}

IndexTensor symbol_indices(const Tensor& xq, const QuantizerState& qs) {
  constexpr double kTolerance = 1e-12;
  IndexTensor out{xq.shape(), std::vector<std::uint16_t>(xq.size())};
  auto xs = xq.data();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t idx = qs.nearest_index(xs[i]);
    if (!(std::abs(xs[i] - qs.level(idx)) <= kTolerance)) {
      throw InternalConsistencyError("symbol_indices: element " + std::to_string(i) + " = " + std::to_string(xs[i]) +
                                     " is not on a quantization level");
    }
    out.indices[i] = static_cast<std::uint16_t>(idx);
  }
  return out;
}

double calibrate_alpha(std::span<const double> pre_activations, double percentile) {
  if (pre_activations.empty()) throw InputError("calibrate_alpha: empty calibration sample");
  std::vector<double> mags(pre_activations.size());
  std::transform(pre_activations.begin(), pre_activations.end(), mags.begin(), [](double v) { return std::abs(v); });
  const double rank = std::ceil(percentile * static_cast<double>(mags.size()));
  const std::size_t k = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(mags.size()))) - 1;
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end());
  return project_alpha(mags[k]);
}

}  // namespace cat
