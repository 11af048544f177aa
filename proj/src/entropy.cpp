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

#include "cat/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "cat/errors.hpp"
#include "cat/ops.hpp"

namespace cat {

std::uint64_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

std::size_t Histogram::present_symbols() const {
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](std::uint64_t c) { return c > 0; }));
}

Histogram Histogram::of(std::span<const std::uint16_t> symbols, std::size_t num_symbols) {
  Histogram h{std::vector<std::uint64_t>(num_symbols, 0)};
  h.add(symbols);
  return h;
}

void Histogram::add(std::span<const std::uint16_t> symbols) {
  for (std::uint16_t s : symbols) {
    if (s >= counts.size()) {
      throw InputError("histogram: symbol " + std::to_string(s) + " outside alphabet of " +
                       std::to_string(counts.size()));
    }
    ++counts[s];
  }
}

double empirical_entropy(const Histogram& h) {
  const std::uint64_t total = h.total();
  if (total == 0) throw InputError("empirical_entropy: empty histogram");
  const double n = static_cast<double>(total);
  double bits = 0.0;
  for (std::uint64_t c : h.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    bits -= p * std::log2(p);
  }
  // -0.0 for a one-hot histogram
  return bits > 0.0 ? bits : 0.0;
}

std::vector<double> soft_assignment(double x, std::span<const double> levels, double temperature) {
  std::vector<double> q(levels.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    q[i] = -temperature * std::abs(x - levels[i]);
    mx = std::max(mx, q[i]);
  }
  double z = 0.0;
  for (double& v : q) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : q) v /= z;
  return q;
}

void SoftEntropyConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw ConfigError("subsample_fraction must be in (0, 1]");
  }
}

std::vector<std::size_t> draw_subsample(std::size_t n, double fraction, Rng& rng) {
  if (n == 0) throw InputError("draw_subsample: no elements");
  std::size_t k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);
  if (k == n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  // Partial Fisher-Yates over an index permutation.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(perm[i], perm[j]);
  }
  perm.resize(k);
  std::sort(perm.begin(), perm.end());
  return perm;
}

TensorPtr soft_entropy(Tape& tape, const TensorPtr& x, std::span<const double> levels, const SoftEntropyConfig& cfg,
                       Rng& rng) {
  cfg.validate();
  if (x->size() == 0) throw InputError("soft_entropy: empty activation");
  if (levels.empty()) throw ConfigError("soft_entropy: empty level set");
  const std::vector<std::size_t> picks = draw_subsample(x->size(), cfg.subsample_fraction, rng);
  const std::size_t n = picks.size();
  const std::size_t num_levels = levels.size();
  const double temperature = cfg.temperature;

  auto assign = std::make_shared<std::vector<double>>(n * num_levels);
  std::vector<double> p(num_levels, 0.0);
  auto xs = x->data();
  for (std::size_t j = 0; j < n; ++j) {
    double* row = assign->data() + j * num_levels;
    const double v = xs[picks[j]];
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < num_levels; ++i) {
      row[i] = -temperature * std::abs(v - levels[i]);
      mx = std::max(mx, row[i]);
    }
    double z = 0.0;
    for (std::size_t i = 0; i < num_levels; ++i) {
      row[i] = std::exp(row[i] - mx);
      z += row[i];
    }
    for (std::size_t i = 0; i < num_levels; ++i) {
      row[i] /= z;
      p[i] += row[i];
    }
  }
  double h = 0.0;
  for (double& pi : p) {
    pi /= static_cast<double>(n);
    if (pi > 0.0) h -= pi * std::log2(pi);
  }

  const bool rec = tape.recording() && x->requires_grad();
  auto out = make_tensor(Tensor::scalar(h));
  out->set_requires_grad(rec);
  if (rec) {
    std::vector<double> level_copy(levels.begin(), levels.end());
    tape.record("soft_entropy", [x, out, assign, p = std::move(p), picks, level_copy = std::move(level_copy),
                                 temperature, n, num_levels] {
      if (!out->has_grad()) return;
      const double upstream = out->grad()[0] / static_cast<double>(n);
      // dH/dp_i
      std::vector<double> g(num_levels, 0.0);
      for (std::size_t i = 0; i < num_levels; ++i) {
        if (p[i] > 0.0) g[i] = -(std::log2(p[i]) + 1.0 / std::numbers::ln2);
      }
      auto xs = x->data();
      auto dx = x->grad();
      for (std::size_t j = 0; j < n; ++j) {
        const double* row = assign->data() + j * num_levels;
        const double v = xs[picks[j]];
        double mean_g = 0.0;
        for (std::size_t i = 0; i < num_levels; ++i) mean_g += g[i] * row[i];
        double acc = 0.0;
        for (std::size_t i = 0; i < num_levels; ++i) {
          const double diff = v - level_copy[i];
          const double dz = diff > 0.0 ? -temperature : (diff < 0.0 ? temperature : 0.0);
          acc += row[i] * (g[i] - mean_g) * dz;
        }
        dx[picks[j]] += upstream * acc;
      }
    });
  }
  return out;
}

TensorPtr compressibility_loss(Tape& tape, const TensorPtr& x) {
  constexpr double kEpsilon = 1e-12;
  double l1 = 0.0;
  double sq = 0.0;
  for (double v : x->data()) {
    l1 += std::abs(v);
    sq += v * v;
  }
  const double l2 = std::sqrt(sq);
  const bool degenerate = l2 < kEpsilon;
  auto out = make_tensor(Tensor::scalar(degenerate ? 0.0 : l1 / l2));
  const bool rec = tape.recording() && x->requires_grad() && !degenerate;
  out->set_requires_grad(tape.recording() && x->requires_grad());
  if (rec) {
    tape.record("compressibility_loss", [x, out, l1, l2] {
      if (!out->has_grad()) return;
      const double upstream = out->grad()[0];
      const double inv_sq = 1.0 / (l2 * l2);
      const double ratio = l1 / l2;
      auto xs = x->data();
      auto dx = x->grad();
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double sign = xs[i] > 0.0 ? 1.0 : (xs[i] < 0.0 ? -1.0 : 0.0);
        dx[i] += upstream * (sign * l2 - xs[i] * ratio) * inv_sq;
      }
    });
  }
  return out;
}

std::string to_string(EntropyLossMode mode) {
  return mode == EntropyLossMode::kSoftEntropy ? "soft_entropy" : "compressibility";
}

EntropyLossMode parse_entropy_loss_mode(const std::string& text) {
  if (text == "soft_entropy") return EntropyLossMode::kSoftEntropy;
  if (text == "compressibility") return EntropyLossMode::kCompressibility;
  throw ConfigError("unknown loss_mode '" + text + "' (expected soft_entropy or compressibility)");
}

TensorPtr network_entropy_loss(Tape& tape, std::span<const SiteActivation> sites, EntropyLossMode mode,
                               const SoftEntropyConfig& cfg, Rng& rng, std::span<const double> weights) {
  if (sites.empty()) throw ConfigError("network_entropy_loss: no activation sites registered");
  if (!weights.empty() && weights.size() != sites.size()) {
    throw ConfigError("network_entropy_loss: " + std::to_string(weights.size()) + " weights for " +
                      std::to_string(sites.size()) + " sites");
  }
  TensorPtr total;
  for (std::size_t s = 0; s < sites.size(); ++s) {
    TensorPtr term = mode == EntropyLossMode::kSoftEntropy ? soft_entropy(tape, sites[s].values, sites[s].levels, cfg, rng)
                                                           : compressibility_loss(tape, sites[s].values);
    if (!weights.empty()) term = scale(tape, term, weights[s]);
    total = total ? add(tape, total, term) : term;
  }
  return total;
}

}  // namespace cat
