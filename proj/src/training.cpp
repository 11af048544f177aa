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

#include "cat/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "cat/errors.hpp"
#include "cat/rng.hpp"

namespace cat {
namespace {

// Sub-stream ids for derive_seed.
constexpr std::uint64_t kPretrainShuffleStream = 10;
constexpr std::uint64_t kShuffleStream = 11;
constexpr std::uint64_t kSubsampleStream = 12;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::size_t argmax_row(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

void check_compatible(const Model& model, const Dataset& data) {
  if (data.height != model.architecture().image_size || data.width != model.architecture().image_size) {
    throw InputError("dataset images are " + std::to_string(data.height) + "x" + std::to_string(data.width) +
                     ", model expects " + std::to_string(model.architecture().image_size) + "x" +
                     std::to_string(model.architecture().image_size));
  }
  for (int label : data.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= model.architecture().classes) {
      throw InputError("dataset label " + std::to_string(label) + " outside the model's classes");
    }
  }
}

const Parameter* first_non_finite(const std::vector<Parameter>& params) {
  for (const Parameter& p : params) {
    for (double v : p.value->data())
      if (!std::isfinite(v)) return &p;
  }
  return nullptr;
}

std::vector<double> site_weights(const ForwardResult& fr, SiteWeighting weighting) {
  if (weighting == SiteWeighting::kUniform) return {};
  std::vector<double> w;
  double total = 0.0;
  for (const SiteActivation& s : fr.activations) {
    w.push_back(static_cast<double>(s.values->size()));
    total += w.back();
  }
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

void TrainingConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
  if (bits < QuantizerState::kMinBits || bits > QuantizerState::kMaxBits) throw ConfigError("bits must be in [1, 8]");
  SoftEntropyConfig{temperature, subsample_fraction}.validate();
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(pretrain_lr > 0.0)) throw ConfigError("pretrain_lr must be > 0");
}

std::map<std::string, std::string> TrainingConfig::to_map() const {
  return {
      {"arch", Architecture::kName},
      {"batch_size", std::to_string(batch_size)},
      {"bits", std::to_string(bits)},
      {"epochs", std::to_string(epochs)},
      {"keep_best", keep_best ? "true" : "false"},
      {"lambda", fmt(lambda)},
      {"loss_mode", to_string(loss_mode)},
      {"lr", fmt(lr)},
      {"momentum", fmt(momentum)},
      {"pretrain_epochs", std::to_string(pretrain_epochs)},
      {"pretrain_lr", fmt(pretrain_lr)},
      {"seed", std::to_string(seed)},
      {"site_weighting", site_weighting == SiteWeighting::kUniform ? "uniform" : "size"},
      {"subsample_fraction", fmt(subsample_fraction)},
      {"temperature", fmt(temperature)},
      {"weight_decay", fmt(weight_decay)},
  };
}

std::string TrainingConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : to_map()) out += k + "=" + v + "\n";
  return out;
}

std::string MetricsLog::to_csv() const {
  std::string out =
      "epoch,task_loss,entropy_loss,total_loss,val_accuracy,entropy_bits,rate_bits,compression_ratio";
  const std::size_t sites = epochs.empty() ? 0 : epochs.front().validation.sites.size();
  for (std::size_t s = 0; s < sites; ++s) out += ",site" + std::to_string(s) + "_entropy";
  out += "\n";
  for (const EpochMetrics& e : epochs) {
    out += std::to_string(e.epoch) + "," + fmt(e.task_loss) + "," + fmt(e.entropy_loss) + "," + fmt(e.total_loss) +
           "," + fmt(e.validation.accuracy) + "," + fmt(e.validation.entropy) + "," + fmt(e.validation.rate) + "," +
           fmt(e.validation.compression_ratio);
    for (const SiteMetrics& s : e.validation.sites) out += "," + fmt(s.entropy);
    out += "\n";
  }
  return out;
}

void pretrain_float(Model& model, const Dataset& train, const TrainingConfig& cfg) {
  if (cfg.pretrain_epochs == 0) return;
  if (train.empty()) throw InputError("pretrain_float: empty training set");
  check_compatible(model, train);
  Rng shuffle(derive_seed(cfg.seed, kPretrainShuffleStream));
  std::vector<std::size_t> order = iota_indices(train.size());
  const SgdOptions sgd{cfg.pretrain_lr, cfg.momentum, cfg.weight_decay};
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    shuffle.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++step) {
      std::span<const std::size_t> idx(order.data() + start, std::min(cfg.batch_size, order.size() - start));
      Tape tape;
      ForwardResult fr = model.forward(tape, train.batch(idx), QuantMode::kFloat);
      TensorPtr loss = softmax_cross_entropy(tape, fr.logits, train.batch_labels(idx));
      if (!std::isfinite(loss->item())) {
        throw DivergenceError("float pre-training diverged at step " + std::to_string(step), step);
      }
      zero_grads(model.parameters());
      tape.backward(*loss);
      sgd_step(model.parameters(), sgd);
      if (const Parameter* bad = first_non_finite(model.parameters())) {
        throw DivergenceError("float pre-training diverged: parameter '" + bad->name +
                                  "' is non-finite after step " + std::to_string(step),
                              step);
      }
    }
  }
  for (Parameter& p : model.parameters()) std::fill(p.velocity.begin(), p.velocity.end(), 0.0);
}

void calibrate(Model& model, const Dataset& calibration, std::size_t batch_size) {
  if (calibration.empty()) throw InputError("calibrate: empty calibration set");
  check_compatible(model, calibration);
  const std::vector<std::size_t> idx = iota_indices(std::min(batch_size, calibration.size()));
  const Tensor batch = calibration.batch(idx);
  for (std::size_t site = 0; site < model.num_sites(); ++site) {
    Tape tape(Tape::Mode::kInference);
    ForwardResult fr = model.forward(tape, batch, QuantMode::kQuantized);
    model.set_alpha(site, calibrate_alpha(fr.pre_activations[site]->data()));
  }
}

TrainResult train(const Model& initial, const Dataset& train, const Dataset& validation, const TrainingConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw InputError("train: empty training set");
  if (validation.empty()) throw InputError("train: empty validation set");
  check_compatible(initial, train);
  check_compatible(initial, validation);

  Model model = initial.clone();
  model.set_bits(cfg.bits);
  for (Parameter& p : model.parameters()) p.velocity.clear();

  Rng shuffle(derive_seed(cfg.seed, kShuffleStream));
  Rng subsample(derive_seed(cfg.seed, kSubsampleStream));
  const SoftEntropyConfig soft{cfg.temperature, cfg.subsample_fraction};
  const SgdOptions sgd{cfg.lr, cfg.momentum, cfg.weight_decay};
  std::vector<std::size_t> order = iota_indices(train.size());

  TrainResult result{model.clone(), {}, 0};
  double best_accuracy = -1.0;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle.shuffle(std::span<std::size_t>(order));
    double task_sum = 0.0, reg_sum = 0.0, total_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++step, ++batches) {
      std::span<const std::size_t> idx(order.data() + start, std::min(cfg.batch_size, order.size() - start));
      Tape tape;
      ForwardResult fr = model.forward(tape, train.batch(idx), QuantMode::kQuantized);
      TensorPtr task = softmax_cross_entropy(tape, fr.logits, train.batch_labels(idx));
      const std::vector<double> weights = site_weights(fr, cfg.site_weighting);

      TensorPtr total = task;
      double reg_value = 0.0;
      if (cfg.lambda > 0.0) {
        TensorPtr reg = network_entropy_loss(tape, fr.activations, cfg.loss_mode, soft, subsample, weights);
        reg_value = reg->item();
        total = add(tape, task, scale(tape, reg, cfg.lambda));
      } else {
        // Logged only; nothing is recorded for the backward pass.
        Tape detached(Tape::Mode::kInference);
        reg_value = network_entropy_loss(detached, fr.activations, cfg.loss_mode, soft, subsample, weights)->item();
      }
      if (!std::isfinite(total->item())) {
        throw DivergenceError("training diverged: non-finite loss at step " + std::to_string(step) + " (epoch " +
                                  std::to_string(epoch) + ")",
                              step);
      }
      zero_grads(model.parameters());
      tape.backward(*total);
      sgd_step(model.parameters(), sgd);
      if (const Parameter* bad = first_non_finite(model.parameters())) {
        throw DivergenceError("training diverged: parameter '" + bad->name + "' is non-finite after step " +
                                  std::to_string(step) + " (epoch " + std::to_string(epoch) + ")",
                              step);
      }
      model.project_alphas();

      task_sum += task->item();
      reg_sum += reg_value;
      total_sum += total->item();
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.task_loss = task_sum / static_cast<double>(batches);
    em.entropy_loss = reg_sum / static_cast<double>(batches);
    em.total_loss = total_sum / static_cast<double>(batches);
    em.validation = evaluate(model, validation);
    result.log.epochs.push_back(em);

    if (!cfg.keep_best || em.validation.accuracy >= best_accuracy) {
      best_accuracy = em.validation.accuracy;
      result.model = model.clone();
      result.selected_epoch = epoch;
    }
  }
  return result;
}

std::vector<std::vector<std::uint16_t>> collect_symbols(const Model& model, const Dataset& data,
                                                        std::size_t batch_size) {
  if (data.empty()) throw InputError("empty dataset");
  check_compatible(model, data);
  std::vector<std::vector<std::uint16_t>> symbols(model.num_sites());
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, data.size() - start);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), start);
    Tape tape(Tape::Mode::kInference);
    ForwardResult fr = model.forward(tape, data.batch(idx), QuantMode::kQuantized);
    for (std::size_t s = 0; s < model.num_sites(); ++s) {
      IndexTensor it = symbol_indices(*fr.site_outputs[s], model.site_state(s));
      symbols[s].insert(symbols[s].end(), it.indices.begin(), it.indices.end());
    }
  }
  return symbols;
}

std::vector<EncodedStream> encode_feature_maps(const Model& model, const Dataset& data, std::size_t batch_size) {
  const auto symbols = collect_symbols(model, data, batch_size);
  std::vector<EncodedStream> streams;
  for (std::size_t s = 0; s < symbols.size(); ++s) {
    streams.push_back(compress(symbols[s], model.site_state(s).num_levels(), model.bits()));
  }
  return streams;
}

Metrics evaluate(const Model& model, const Dataset& data, std::size_t batch_size) {
  if (data.empty()) throw InputError("evaluate: empty dataset");
  check_compatible(model, data);
  Metrics m;
  m.bits = model.bits();
  std::size_t correct = 0;
  std::vector<Histogram> hists(model.num_sites());
  for (std::size_t s = 0; s < model.num_sites(); ++s) hists[s].counts.assign(model.site_state(s).num_levels(), 0);
  std::vector<std::vector<std::uint16_t>> symbols(model.num_sites());

  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, data.size() - start);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), start);
    Tape tape(Tape::Mode::kInference);
    ForwardResult fr = model.forward(tape, data.batch(idx), QuantMode::kQuantized);
    const std::size_t k = fr.logits->dim(1);
    for (std::size_t i = 0; i < n; ++i) {
      if (static_cast<int>(argmax_row(fr.logits->data().subspan(i * k, k))) == data.labels[idx[i]]) ++correct;
    }
    for (std::size_t s = 0; s < model.num_sites(); ++s) {
      IndexTensor it = symbol_indices(*fr.site_outputs[s], model.site_state(s));
      symbols[s].insert(symbols[s].end(), it.indices.begin(), it.indices.end());
    }
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());

  double weighted_h = 0.0, weighted_r = 0.0, elements = 0.0;
  for (std::size_t s = 0; s < model.num_sites(); ++s) {
    hists[s].add(symbols[s]);
    const EncodedStream stream = encode(symbols[s], HuffmanCodebook::build(hists[s]), model.bits());
    SiteMetrics sm{symbols[s].size(), empirical_entropy(hists[s]), measured_rate(stream), stream.header_bytes()};
    weighted_h += sm.entropy * static_cast<double>(sm.elements);
    weighted_r += sm.rate * static_cast<double>(sm.elements);
    elements += static_cast<double>(sm.elements);
    m.sites.push_back(sm);
  }
  m.entropy = weighted_h / elements;
  m.rate = weighted_r / elements;
  m.compression_ratio = static_cast<double>(m.bits) / m.rate;
  return m;
}

}  // namespace cat
