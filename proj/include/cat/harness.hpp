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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cat/config.hpp"
#include "cat/dataset.hpp"
#include "cat/training.hpp"

namespace cat {

// Everything one experiment needs besides the per-run training settings.
struct ExperimentOptions {
  TrainingConfig training;
  std::string data_source = "synthetic";
  std::uint64_t data_seed = 1;
  SyntheticOptions synthetic;
  double validation_fraction = 0.1;
  std::vector<double> lambda_grid = {0.0, 0.01, 0.03, 0.1, 0.3};
  std::vector<EntropyLossMode> loss_modes = {EntropyLossMode::kSoftEntropy, EntropyLossMode::kCompressibility};
  // Start CAT fine-tuning from this checkpoint instead of pre-training.
  std::optional<std::string> init_checkpoint;

  // Training settings plus data and grid keys, as key=value lines.
  std::string echo() const;
};

// The twelve keys every config must define.
const std::vector<std::string>& required_config_keys();

// Throws ConfigError listing missing keys or naming an invalid value.
ExperimentOptions experiment_from_config(const KeyValueConfig& cfg);

// Loads data_source and splits it with data_seed.
DataSplit load_split(const ExperimentOptions& options);

// Fresh initialization (seeded by cfg.seed) followed by float pre-training,
// or the init checkpoint when one is set.
Model starting_model(const ExperimentOptions& options, const TrainingConfig& cfg, const Dataset& train);

struct RunOutcome {
  TrainingConfig config;
  TrainResult trained;
  Metrics metrics;  // on the validation split
  double runtime_seconds = 0.0;
};

// Calibrates a copy of `start`, runs CAT fine-tuning and evaluates.
RunOutcome run_from(const Model& start, const DataSplit& split, const TrainingConfig& cfg);
RunOutcome run_single(const ExperimentOptions& options, const TrainingConfig& cfg, const DataSplit& split);

struct ReportRow {
  double lambda = 0.0;
  std::string loss_mode;
  int bits = 0;
  double accuracy = 0.0;
  double entropy = 0.0;
  double rate = 0.0;
  double compression_ratio = 0.0;
  std::string seed;  // a seed value, or "mean" / "std" for aggregates
  double runtime_seconds = 0.0;
};

ReportRow report_row(const RunOutcome& outcome);

// lambda,loss_mode,bits,accuracy,entropy_bits,rate_bits,compression_ratio,seed
std::string report_csv(const std::vector<ReportRow>& rows);
// Run-time measurements, kept apart so the report itself is reproducible.
std::string timing_csv(const std::vector<ReportRow>& rows);

// Every (loss_mode, lambda) pair of the grid, modes outer. Runs with the
// same seed share one pre-trained starting model. `jobs` bounds the number
// of concurrent runs; results do not depend on it.
std::vector<ReportRow> run_sweep(const ExperimentOptions& options, std::size_t jobs);

struct RobustnessReport {
  std::vector<ReportRow> runs;
  ReportRow mean;
  ReportRow stddev;  // sample standard deviation
  std::vector<std::string> failures;
};

// One run per seed with otherwise identical settings. Failed runs are
// recorded and excluded; fewer than two successes is a RuntimeFailure.
RobustnessReport run_robustness(const ExperimentOptions& options, const std::vector<std::uint64_t>& seeds,
                                std::size_t jobs);

std::string robustness_csv(const RobustnessReport& report);

// Runs fn(i) for i in [0, count) on at most `jobs` threads.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace cat
