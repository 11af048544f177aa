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

// cat-codec: train, evaluate, encode and sweep compression-aware models.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cat/codec.hpp"
#include "cat/errors.hpp"
#include "cat/harness.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

struct CommonFlags {
  std::string config;
  std::string data;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string ckpt;
  std::string split = "validation";
  std::size_t seeds = 5;
  std::vector<std::string> streams;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cat::InputError("cannot write '" + path.string() + "'");
  out << text;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cat::InputError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cat::InputError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

cat::ExperimentOptions options_from(const CommonFlags& f) {
  cat::KeyValueConfig cfg = cat::KeyValueConfig::load(f.config);
  if (!f.data.empty()) cfg.set("data", f.data);
  if (f.seed) cfg.set("seed", std::to_string(*f.seed));
  return cat::experiment_from_config(cfg);
}

// Evaluation commands rebuild the data options from the checkpoint's echo,
// so the held-out split matches the one used in training.
cat::ExperimentOptions options_from_checkpoint(const CommonFlags& f, const std::string& echo) {
  cat::KeyValueConfig cfg = f.config.empty() ? cat::KeyValueConfig::parse(echo) : cat::KeyValueConfig::load(f.config);
  if (!f.data.empty()) cfg.set("data", f.data);
  return cat::experiment_from_config(cfg);
}

cat::Dataset select_split(const cat::ExperimentOptions& o, const std::string& which) {
  cat::DataSplit split = cat::load_split(o);
  if (which == "validation") return std::move(split.validation);
  if (which == "train") return std::move(split.train);
  return cat::load_dataset(o.data_source, o.data_seed, o.synthetic);
}

std::string metrics_csv(const cat::Metrics& m) {
  std::string out = "site,elements,entropy_bits,rate_bits,header_bytes\n";
  for (std::size_t s = 0; s < m.sites.size(); ++s) {
    const auto& sm = m.sites[s];
    out += std::to_string(s) + "," + std::to_string(sm.elements) + "," + std::to_string(sm.entropy) + "," +
           std::to_string(sm.rate) + "," + std::to_string(sm.header_bytes) + "\n";
  }
  return out;
}

void print_metrics(const cat::Metrics& m) {
  std::printf("accuracy=%.4f entropy=%.4f bits rate=%.4f bits compression_ratio=%.3f (b=%d)\n", m.accuracy,
              m.entropy, m.rate, m.compression_ratio, m.bits);
}

int cmd_train(const CommonFlags& f) {
  const cat::ExperimentOptions o = options_from(f);
  const cat::DataSplit split = cat::load_split(o);
  const cat::RunOutcome run = cat::run_single(o, o.training, split);
  fs::create_directories(f.out);
  cat::save_checkpoint(run.trained.model, o.echo(), (fs::path(f.out) / "model.catm").string());
  write_file(fs::path(f.out) / "metrics.csv", run.trained.log.to_csv());
  write_file(fs::path(f.out) / "eval.csv", cat::report_csv({cat::report_row(run)}));
  std::printf("selected epoch %zu of %zu\n", run.trained.selected_epoch, o.training.epochs);
  print_metrics(run.metrics);
  return 0;
}

int cmd_eval(const CommonFlags& f) {
  const cat::LoadedCheckpoint ckpt = cat::load_checkpoint(f.ckpt);
  const cat::ExperimentOptions o = options_from_checkpoint(f, ckpt.config_echo);
  const cat::Metrics m = cat::evaluate(ckpt.model, select_split(o, f.split));
  if (!f.out.empty() && f.out != ".") {
    fs::create_directories(f.out);
    write_file(fs::path(f.out) / "eval_sites.csv", metrics_csv(m));
  }
  print_metrics(m);
  return 0;
}

int cmd_encode(const CommonFlags& f) {
  const cat::LoadedCheckpoint ckpt = cat::load_checkpoint(f.ckpt);
  const cat::ExperimentOptions o = options_from_checkpoint(f, ckpt.config_echo);
  const auto streams = cat::encode_feature_maps(ckpt.model, select_split(o, f.split));
  fs::create_directories(f.out);
  std::string summary = "site,file,symbols,payload_bits,header_bytes,rate_bits\n";
  for (std::size_t s = 0; s < streams.size(); ++s) {
    const std::string name = "site" + std::to_string(s) + ".catc";
    write_bytes(fs::path(f.out) / name, streams[s].serialize());
    summary += std::to_string(s) + "," + name + "," + std::to_string(streams[s].count) + "," +
               std::to_string(streams[s].payload_bits) + "," + std::to_string(streams[s].header_bytes()) + "," +
               std::to_string(cat::measured_rate(streams[s])) + "\n";
  }
  write_file(fs::path(f.out) / "rate_summary.csv", summary);
  std::cout << summary;
  return 0;
}

int cmd_decode(const CommonFlags& f) {
  for (const std::string& path : f.streams) {
    const auto bytes = read_bytes(path);
    const cat::EncodedStream stream = cat::EncodedStream::parse(bytes);
    const auto symbols = cat::decode(stream);
    const cat::EncodedStream again = cat::encode(symbols, stream.codebook, stream.bits);
    if (again.serialize() != bytes) throw cat::RuntimeFailure(path + ": re-encoding does not reproduce the stream");
    const cat::Histogram h = cat::Histogram::of(symbols, stream.codebook.num_symbols());
    std::printf("%s: round-trip OK N=%llu\n", path.c_str(), static_cast<unsigned long long>(symbols.size()));
    std::printf("symbol,count\n");
    for (std::size_t s = 0; s < h.counts.size(); ++s) {
      if (h.counts[s]) std::printf("%zu,%llu\n", s, static_cast<unsigned long long>(h.counts[s]));
    }
  }
  return 0;
}

int cmd_sweep(const CommonFlags& f) {
  const cat::ExperimentOptions o = options_from(f);
  const auto rows = cat::run_sweep(o, f.jobs);
  fs::create_directories(f.out);
  write_file(fs::path(f.out) / "sweep.csv", cat::report_csv(rows));
  write_file(fs::path(f.out) / "sweep_timing.csv", cat::timing_csv(rows));
  std::cout << cat::report_csv(rows);
  return 0;
}

int cmd_robustness(const CommonFlags& f) {
  const cat::ExperimentOptions o = options_from(f);
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < f.seeds; ++k) seeds.push_back(o.training.seed + k);
  const auto report = cat::run_robustness(o, seeds, f.jobs);
  fs::create_directories(f.out);
  write_file(fs::path(f.out) / "robustness.csv", cat::robustness_csv(report));
  std::cout << cat::robustness_csv(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compression-aware training and feature-map coding"};
  app.require_subcommand(1);
  CommonFlags f;

  auto* train = app.add_subcommand("train", "pre-train, calibrate and CAT fine-tune a model");
  train->add_option("--config", f.config, "config file")->required();
  train->add_option("--data", f.data, "CSV path or 'synthetic'");
  train->add_option("--out", f.out, "output directory");
  train->add_option("--seed", f.seed, "override the config seed");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--ckpt", f.ckpt, "checkpoint path")->required();
  eval->add_option("--config", f.config, "config file (default: the checkpoint's own)");
  eval->add_option("--data", f.data, "CSV path or 'synthetic'");
  eval->add_option("--out", f.out, "write per-site metrics here");
  eval->add_option("--split", f.split, "validation, train or all")
      ->check(CLI::IsMember({"validation", "train", "all"}));

  auto* encode = app.add_subcommand("encode", "write one encoded stream per activation site");
  encode->add_option("--ckpt", f.ckpt, "checkpoint path")->required();
  encode->add_option("--config", f.config, "config file (default: the checkpoint's own)");
  encode->add_option("--data", f.data, "CSV path or 'synthetic'");
  encode->add_option("--out", f.out, "output directory")->required();
  encode->add_option("--split", f.split, "validation, train or all")
      ->check(CLI::IsMember({"validation", "train", "all"}));

  auto* decode = app.add_subcommand("decode", "verify encoded streams round-trip");
  decode->add_option("streams", f.streams, "stream files")->required();

  auto* sweep = app.add_subcommand("sweep", "run the lambda x loss-mode grid");
  sweep->add_option("--config", f.config, "config file")->required();
  sweep->add_option("--data", f.data, "CSV path or 'synthetic'");
  sweep->add_option("--out", f.out, "output directory");
  sweep->add_option("--seed", f.seed, "override the config seed");
  sweep->add_option("--jobs", f.jobs, "concurrent runs")->check(CLI::PositiveNumber);

  auto* robust = app.add_subcommand("robustness", "repeat one configuration over several seeds");
  robust->add_option("--config", f.config, "config file")->required();
  robust->add_option("--data", f.data, "CSV path or 'synthetic'");
  robust->add_option("--out", f.out, "output directory");
  robust->add_option("--seed", f.seed, "first seed (default: the config seed)");
  robust->add_option("--seeds", f.seeds, "number of seeds")->check(CLI::Range(2, 1000));
  robust->add_option("--jobs", f.jobs, "concurrent runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(f);
    if (*eval) return cmd_eval(f);
    if (*encode) return cmd_encode(f);
    if (*decode) return cmd_decode(f);
    if (*sweep) return cmd_sweep(f);
    if (*robust) return cmd_robustness(f);
  } catch (const cat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cat::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
