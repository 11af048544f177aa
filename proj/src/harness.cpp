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

#include "cat/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>

#include "cat/errors.hpp"
#include "cat/rng.hpp"

namespace cat {
namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::size_t kCalibrationImages = 256;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ReportRow aggregate(const std::vector<ReportRow>& rows, bool stddev) {
  ReportRow out = rows.front();
  out.seed = stddev ? "std" : "mean";
  auto stat = [&](double ReportRow::*field) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r.*field;
    mean /= static_cast<double>(rows.size());
    if (!stddev) return mean;
    double ss = 0.0;
    for (const auto& r : rows) ss += (r.*field - mean) * (r.*field - mean);
    return std::sqrt(ss / static_cast<double>(rows.size() - 1));
  };
  out.accuracy = stat(&ReportRow::accuracy);
  out.entropy = stat(&ReportRow::entropy);
  out.rate = stat(&ReportRow::rate);
  out.compression_ratio = stat(&ReportRow::compression_ratio);
  out.runtime_seconds = stat(&ReportRow::runtime_seconds);
  return out;
}

}  // namespace

const std::vector<std::string>& required_config_keys() {
  static const std::vector<std::string> keys = {"lambda", "loss_mode",    "bits",       "temperature",
                                                "subsample_fraction", "lr", "momentum", "weight_decay",
                                                "epochs", "batch_size", "seed", "arch"};
  return keys;
}

std::string ExperimentOptions::echo() const {
  auto map = training.to_map();
  map["data"] = data_source;
  map["data_seed"] = std::to_string(data_seed);
  map["samples"] = std::to_string(synthetic.samples);
  map["image_size"] = std::to_string(synthetic.image_size);
  map["validation_fraction"] = fmt(validation_fraction);
  std::string grid;
  for (double l : lambda_grid) grid += (grid.empty() ? "" : ",") + fmt(l);
  map["lambda_grid"] = grid;
  std::string modes;
  for (auto m : loss_modes) modes += (modes.empty() ? "" : ",") + to_string(m);
  map["loss_modes"] = modes;
  std::string out;
  for (const auto& [k, v] : map) out += k + "=" + v + "\n";
  return out;
}

ExperimentOptions experiment_from_config(const KeyValueConfig& cfg) {
  cfg.require_all(required_config_keys());
  if (cfg.string_or("arch", "") != Architecture::kName) {
    throw ConfigError("config key 'arch' must be toy-cnn-v1, got '" + cfg.string_or("arch", "") + "'");
  }
  ExperimentOptions o;
  TrainingConfig& t = o.training;
  t.lambda = cfg.real_or("lambda", t.lambda);
  t.loss_mode = parse_entropy_loss_mode(cfg.string_or("loss_mode", ""));
  t.bits = static_cast<int>(cfg.uint_or("bits", 4));
  t.temperature = cfg.real_or("temperature", t.temperature);
  t.subsample_fraction = cfg.real_or("subsample_fraction", t.subsample_fraction);
  t.lr = cfg.real_or("lr", t.lr);
  t.momentum = cfg.real_or("momentum", t.momentum);
  t.weight_decay = cfg.real_or("weight_decay", t.weight_decay);
  t.epochs = cfg.uint_or("epochs", t.epochs);
  t.batch_size = cfg.uint_or("batch_size", t.batch_size);
  t.seed = cfg.uint_or("seed", t.seed);
  t.pretrain_epochs = cfg.uint_or("pretrain_epochs", t.pretrain_epochs);
  t.pretrain_lr = cfg.real_or("pretrain_lr", t.pretrain_lr);
  t.keep_best = cfg.bool_or("keep_best", t.keep_best);
  const std::string weighting = cfg.string_or("site_weighting", "uniform");
  if (weighting == "uniform") t.site_weighting = SiteWeighting::kUniform;
  else if (weighting == "size") t.site_weighting = SiteWeighting::kBySize;
  else throw ConfigError("config key 'site_weighting' must be uniform or size, got '" + weighting + "'");
  t.validate();

  o.data_source = cfg.string_or("data", o.data_source);
  o.data_seed = cfg.uint_or("data_seed", o.data_seed);
  o.synthetic.samples = cfg.uint_or("samples", o.synthetic.samples);
  o.synthetic.image_size = cfg.uint_or("image_size", o.synthetic.image_size);
  o.validation_fraction = cfg.real_or("validation_fraction", o.validation_fraction);
  if (!(o.validation_fraction > 0.0 && o.validation_fraction < 1.0)) {
    throw ConfigError("config key 'validation_fraction' must be in (0, 1)");
  }
  if (cfg.has("lambda_grid")) {
    o.lambda_grid.clear();
    KeyValueConfig one;
    for (const auto& item : cfg.list_or("lambda_grid", {})) {
      one.set("lambda_grid", item);
      const double l = one.real_or("lambda_grid", 0.0);
      if (l < 0.0) throw ConfigError("config key 'lambda_grid': values must be >= 0");
      o.lambda_grid.push_back(l);
    }
  }
  if (cfg.has("loss_modes")) {
    o.loss_modes.clear();
    for (const auto& item : cfg.list_or("loss_modes", {})) o.loss_modes.push_back(parse_entropy_loss_mode(item));
  }
  if (auto init = cfg.get("init_checkpoint")) o.init_checkpoint = *init;
  return o;
}

DataSplit load_split(const ExperimentOptions& options) {
  Dataset data = load_dataset(options.data_source, options.data_seed, options.synthetic);
  if (data.empty()) throw InputError("dataset '" + options.data_source + "' has no samples");
  return split_dataset(data, options.validation_fraction, derive_seed(options.data_seed, 1));
}

Model starting_model(const ExperimentOptions& options, const TrainingConfig& cfg, const Dataset& train) {
  if (options.init_checkpoint) return load_checkpoint(*options.init_checkpoint).model;
  Architecture arch;
  arch.image_size = train.height;
  arch.classes = train.classes;
  Model model = Model::initialize(arch, cfg.bits, derive_seed(cfg.seed, kInitStream));
  pretrain_float(model, train, cfg);
  calibrate(model, train, kCalibrationImages);
  return model;
}

RunOutcome run_from(const Model& start, const DataSplit& split, const TrainingConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Model model = start.clone();
  if (model.bits() != cfg.bits) model.set_bits(cfg.bits);
  TrainResult trained = train(model, split.train, split.validation, cfg);
  Metrics metrics = evaluate(trained.model, split.validation);
  return {cfg, std::move(trained), metrics, seconds_since(t0)};
}

RunOutcome run_single(const ExperimentOptions& options, const TrainingConfig& cfg, const DataSplit& split) {
  const auto t0 = std::chrono::steady_clock::now();
  const Model start = starting_model(options, cfg, split.train);
  RunOutcome out = run_from(start, split, cfg);
  out.runtime_seconds = seconds_since(t0);
  return out;
}

ReportRow report_row(const RunOutcome& o) {
  return {o.config.lambda,
          to_string(o.config.loss_mode),
          o.config.bits,
          o.metrics.accuracy,
          o.metrics.entropy,
          o.metrics.rate,
          o.metrics.compression_ratio,
          std::to_string(o.config.seed),
          o.runtime_seconds};
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "lambda,loss_mode,bits,accuracy,entropy_bits,rate_bits,compression_ratio,seed\n";
  for (const auto& r : rows) {
    out += fmt(r.lambda) + "," + r.loss_mode + "," + std::to_string(r.bits) + "," + fmt(r.accuracy) + "," +
           fmt(r.entropy) + "," + fmt(r.rate) + "," + fmt(r.compression_ratio) + "," + r.seed + "\n";
  }
  return out;
}

std::string timing_csv(const std::vector<ReportRow>& rows) {
  std::string out = "lambda,loss_mode,seed,runtime_seconds\n";
  for (const auto& r : rows) {
    out += fmt(r.lambda) + "," + r.loss_mode + "," + r.seed + "," + fmt(r.runtime_seconds) + "\n";
  }
  return out;
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<ReportRow> run_sweep(const ExperimentOptions& options, std::size_t jobs) {
  if (options.lambda_grid.empty() || options.loss_modes.empty()) throw ConfigError("sweep grid is empty");
  const DataSplit split = load_split(options);
  const auto t0 = std::chrono::steady_clock::now();
  const Model start = starting_model(options, options.training, split.train);
  const double shared_seconds = seconds_since(t0);

  std::vector<TrainingConfig> grid;
  for (auto mode : options.loss_modes) {
    for (double lambda : options.lambda_grid) {
      TrainingConfig cfg = options.training;
      cfg.loss_mode = mode;
      cfg.lambda = lambda;
      grid.push_back(cfg);
    }
  }
  std::vector<ReportRow> rows(grid.size());
  parallel_for(grid.size(), jobs, [&](std::size_t i) {
    RunOutcome o = run_from(start, split, grid[i]);
    o.runtime_seconds += shared_seconds;
    rows[i] = report_row(o);
  });
  return rows;
}

RobustnessReport run_robustness(const ExperimentOptions& options, const std::vector<std::uint64_t>& seeds,
                                std::size_t jobs) {
  if (seeds.size() < 2) throw ConfigError("robustness needs at least two seeds");
  const DataSplit split = load_split(options);
  std::vector<std::optional<ReportRow>> rows(seeds.size());
  std::vector<std::string> errors(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    TrainingConfig cfg = options.training;
    cfg.seed = seeds[i];
    try {
      rows[i] = report_row(run_single(options, cfg, split));
    } catch (const Error& e) {
      errors[i] = "seed " + std::to_string(seeds[i]) + ": " + e.what();
    }
  });
  RobustnessReport report;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (rows[i]) {
      report.runs.push_back(*rows[i]);
    } else {
      std::cerr << "warning: robustness run failed and is excluded (" << errors[i] << ")\n";
      report.failures.push_back(errors[i]);
    }
  }
  if (report.runs.size() < 2) {
    throw RuntimeFailure("robustness: only " + std::to_string(report.runs.size()) + " of " +
                         std::to_string(seeds.size()) + " runs succeeded");
  }
  report.mean = aggregate(report.runs, false);
  report.stddev = aggregate(report.runs, true);
  return report;
}

std::string robustness_csv(const RobustnessReport& report) {
  std::vector<ReportRow> rows = report.runs;
  rows.push_back(report.mean);
  rows.push_back(report.stddev);
  return report_csv(rows);
}

}  // namespace cat
