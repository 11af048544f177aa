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

#include "cat/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "cat/errors.hpp"
#include "cat/rng.hpp"

namespace cat {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view s, int& out) {
  s = trim(s);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_real(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  std::string tmp(s);
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size() && std::isfinite(out);
}

}  // namespace

Tensor Dataset::batch(std::span<const std::size_t> indices) const {
  const std::size_t n = image_elements();
  std::vector<double> data(indices.size() * n);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(indices[i] * n), n,
                data.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return Tensor({indices.size(), 1, height, width}, std::move(data));
}

std::vector<int> Dataset::batch_labels(std::span<const std::size_t> indices) const {
  std::vector<int> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) out[i] = labels[indices[i]];
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out{height, width, classes, {}, batch_labels(indices)};
  const std::size_t n = image_elements();
  out.pixels.resize(indices.size() * n);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(indices[i] * n), n,
                out.pixels.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return out;
}

Dataset make_synthetic(std::uint64_t seed, const SyntheticOptions& options) {
  if (options.samples == 0) throw InputError("synthetic dataset needs at least one sample");
  if (options.image_size < 8) throw InputError("synthetic images must be at least 8x8");
  const std::size_t side = options.image_size;
  Dataset data{side, side, 10, std::vector<double>(options.samples * side * side), std::vector<int>(options.samples)};
  Rng rng(seed);
  const double centre = (static_cast<double>(side) - 1.0) / 2.0;
  for (std::size_t s = 0; s < options.samples; ++s) {
    const int label = static_cast<int>(rng.below(10));
    data.labels[s] = label;
    const double angle = label * std::numbers::pi / 10.0 + rng.uniform(-1.0, 1.0) * std::numbers::pi / 40.0;
    const double offset = rng.uniform(-1.5, 1.5);
    const double intensity = rng.uniform(0.75, 1.0);
    // Unit normal of the bar direction.
    const double nx = -std::sin(angle);
    const double ny = std::cos(angle);
    double* img = data.pixels.data() + s * side * side;
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        const double dist = (static_cast<double>(x) - centre) * nx + (static_cast<double>(y) - centre) * ny - offset;
        double v = intensity * std::clamp(1.5 - std::abs(dist), 0.0, 1.0) + options.noise * rng.normal();
        v = std::clamp(v, 0.0, 1.0);
        img[y * side + x] = std::round(v * 255.0) / 255.0;
      }
    }
  }
  return data;
}

Dataset load_csv(const std::string& path, std::size_t classes) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset file '" + path + "'");
  Dataset data;
  data.classes = classes;
  std::string line;
  std::size_t line_no = 0;
  std::size_t pixels_per_row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view);
    int label = 0;
    if (!parse_int(fields[0], label)) {
      if (line_no == 1) continue;  // header
      throw ParseError("label field '" + std::string(trim(fields[0])) + "' is not an integer", line_no);
    }
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw ParseError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")", line_no);
    }
    const std::size_t count = fields.size() - 1;
    if (pixels_per_row == 0) {
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(count))));
      if (count == 0 || side * side != count) {
        throw ParseError("row has " + std::to_string(count) + " pixels, expected a square image", line_no);
      }
      pixels_per_row = count;
      data.height = data.width = side;
    } else if (count != pixels_per_row) {
      throw ParseError("row has " + std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(pixels_per_row + 1),
                       line_no);
    }
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v = 0.0;
      if (!parse_real(fields[i], v) || v < 0.0 || v > 255.0) {
        throw ParseError("pixel " + std::to_string(i - 1) + " is not a number in [0, 255]", line_no);
      }
      data.pixels.push_back(v / 255.0);
    }
    data.labels.push_back(label);
  }
  return data;
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write dataset file '" + path + "'");
  out << "label";
  for (std::size_t i = 0; i < data.image_elements(); ++i) out << ",p" << i;
  out << '\n';
  for (std::size_t s = 0; s < data.size(); ++s) {
    out << data.labels[s];
    for (std::size_t i = 0; i < data.image_elements(); ++i) {
      out << ',' << std::llround(data.pixels[s * data.image_elements() + i] * 255.0);
    }
    out << '\n';
  }
}

Dataset load_dataset(const std::string& source, std::uint64_t seed, const SyntheticOptions& options) {
  if (source == "synthetic") return make_synthetic(seed, options);
  return load_csv(source);
}

DataSplit split_dataset(const Dataset& data, double validation_fraction, std::uint64_t seed) {
  if (data.empty()) throw InputError("cannot split an empty dataset");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must be in [0, 1)");
  }
  if (validation_fraction > 0.0 && data.size() < 2) throw InputError("need at least two samples to hold out a split");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  auto held = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(data.size())));
  if (validation_fraction > 0.0) held = std::clamp<std::size_t>(held, 1, data.size() - 1);
  const std::size_t cut = data.size() - held;
  std::span<const std::size_t> all(order);
  return {data.subset(all.first(cut)), data.subset(all.subspan(cut))};
}

}  // namespace cat
