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
#include <map>
#include <string>
#include <vector>

#include "cat/codec.hpp"
#include "cat/dataset.hpp"
#include "cat/entropy.hpp"
#include "cat/model.hpp"

namespace cat {

enum class SiteWeighting { kUniform, kBySize };

struct TrainingConfig {
  double lambda = 0.0;
  EntropyLossMode loss_mode = EntropyLossMode::kSoftEntropy;
  int bits = 4;
  double temperature = 10.0;
  double subsample_fraction = 0.25;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 4e-5;
  std::size_t epochs = 6;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;

  // Float pre-training that precedes calibration and CAT fine-tuning.
  std::size_t pretrain_epochs = 10;
  double pretrain_lr = 0.02;
  SiteWeighting site_weighting = SiteWeighting::kUniform;
  // Keep the epoch with the best validation accuracy instead of the last.
  bool keep_best = true;

  void validate() const;
  // key=value lines, sorted by key.
  std::string echo() const;
  std::map<std::string, std::string> to_map() const;
};

struct SiteMetrics {
  std::size_t elements = 0;
  double entropy = 0.0;
  double rate = 0.0;
  std::size_t header_bytes = 0;
};

struct Metrics {
  double accuracy = 0.0;
  std::vector<SiteMetrics> sites;
  // Element-count weighted means over sites.
  double entropy = 0.0;
  double rate = 0.0;
  double compression_ratio = 0.0;
  int bits = 0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double task_loss = 0.0;
  double entropy_loss = 0.0;
  double total_loss = 0.0;
  Metrics validation;
};

struct MetricsLog {
  std::vector<EpochMetrics> epochs;
  std::string to_csv() const;
};

struct TrainResult {
  Model model;
  MetricsLog log;
  std::size_t selected_epoch = 0;
};

// Plain float training with cross-entropy only.
void pretrain_float(Model& model, const Dataset& train, const TrainingConfig& cfg);

// Sets every site's alpha to the 99.9th percentile of |pre-activation| on
// the first batch_size training images, sites calibrated in order with the
// earlier sites already quantized.
void calibrate(Model& model, const Dataset& calibration, std::size_t batch_size);

// CAT fine-tuning of an initialized (pre-trained or loaded) model: minimizes
// cross-entropy + lambda * entropy loss with quantized forward passes.
// Throws DivergenceError on a non-finite loss.
TrainResult train(const Model& initial, const Dataset& train, const Dataset& validation, const TrainingConfig& cfg);

// Accuracy and per-site entropy / Huffman rate, each site's quantized
// activations over the whole set forming one encoded feature map.
Metrics evaluate(const Model& model, const Dataset& data, std::size_t batch_size = 256);

// Per-site quantized symbols over the dataset, in dataset order.
std::vector<std::vector<std::uint16_t>> collect_symbols(const Model& model, const Dataset& data,
                                                        std::size_t batch_size = 256);

std::vector<EncodedStream> encode_feature_maps(const Model& model, const Dataset& data, std::size_t batch_size = 256);

// Checkpoint: "CATM" | version u8 | descriptor | tensor table | sites | config echo.
void save_checkpoint(const Model& model, const std::string& config_echo, const std::string& path);
std::vector<std::uint8_t> serialize_checkpoint(const Model& model, const std::string& config_echo);

struct LoadedCheckpoint {
  Model model;
  std::string config_echo;
};

LoadedCheckpoint load_checkpoint(const std::string& path);
LoadedCheckpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace cat
