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

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cat/errors.hpp"
#include "cat/training.hpp"

namespace cat {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'C', 'A', 'T', 'M'};
constexpr std::uint8_t kVersion = 1;

class Writer {
 public:
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void uint(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    uint(s.size(), 4);
    out_.insert(out_.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8() { return bytes(1)[0]; }
  std::uint64_t uint(int width) {
    auto b = bytes(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  std::string str() {
    const std::uint64_t n = uint(4);
    auto b = bytes(static_cast<std::size_t>(n));
    return std::string(b.begin(), b.end());
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw MalformedCheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

bool is_site_alpha(const std::string& name) { return name.rfind("site", 0) == 0; }

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Model& model, const std::string& config_echo) {
  Writer w;
  w.bytes(kMagic);
  w.u8(kVersion);
  w.str(model.architecture().descriptor());

  std::vector<const Parameter*> tensors;
  for (const Parameter& p : model.parameters()) {
    if (!is_site_alpha(p.name)) tensors.push_back(&p);
  }
  w.uint(tensors.size(), 4);
  for (const Parameter* p : tensors) {
    w.str(p->name);
    const Shape& shape = p->value->shape();
    w.u8(static_cast<std::uint8_t>(shape.size()));
    for (std::size_t d : shape) w.uint(d, 8);
    for (double v : p->value->data()) w.f64(v);
  }
  w.uint(model.num_sites(), 4);
  for (std::size_t s = 0; s < model.num_sites(); ++s) {
    const QuantizerState qs = model.site_state(s);
    w.f64(qs.alpha());
    w.u8(static_cast<std::uint8_t>(qs.bits()));
  }
  w.str(config_echo);
  return w.take();
}

void save_checkpoint(const Model& model, const std::string& config_echo, const std::string& path) {
  const auto bytes = serialize_checkpoint(model, config_echo);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing checkpoint '" + path + "'");
}

LoadedCheckpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw MalformedCheckpointError("bad checkpoint magic, expected \"CATM\"");
  }
  const std::uint8_t version = r.u8();
  if (version != kVersion) throw MalformedCheckpointError("unsupported checkpoint version " + std::to_string(version));

  Architecture arch;
  try {
    arch = Architecture::parse(r.str());
  } catch (const ConfigError& e) {
    throw MalformedCheckpointError(std::string("bad architecture descriptor: ") + e.what());
  }
  Model model(arch, 8);

  const std::uint64_t count = r.uint(4);
  std::size_t expected = 0;
  for (const Parameter& p : model.parameters()) expected += is_site_alpha(p.name) ? 0 : 1;
  if (count != expected) {
    throw MalformedCheckpointError("checkpoint holds " + std::to_string(count) + " tensors, architecture needs " +
                                   std::to_string(expected));
  }
  for (std::uint64_t t = 0; t < count; ++t) {
    const std::string name = r.str();
    Parameter* target = nullptr;
    for (Parameter& p : model.parameters()) {
      if (p.name == name && !is_site_alpha(name)) target = &p;
    }
    if (!target) throw MalformedCheckpointError("unexpected tensor '" + name + "'");
    const std::uint8_t rank = r.u8();
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.uint(8));
    if (shape != target->value->shape()) {
      throw MalformedCheckpointError("tensor '" + name + "' has shape " + shape_string(shape) + ", expected " +
                                     shape_string(target->value->shape()));
    }
    for (double& v : target->value->data()) v = r.f64();
  }

  const std::uint64_t sites = r.uint(4);
  if (sites != model.num_sites()) throw MalformedCheckpointError("wrong number of quantization sites");
  int bits = -1;
  std::vector<double> alphas;
  for (std::uint64_t s = 0; s < sites; ++s) {
    alphas.push_back(r.f64());
    const int b = r.u8();
    if (bits >= 0 && b != bits) throw MalformedCheckpointError("sites disagree on bit-width");
    bits = b;
  }
  try {
    model.set_bits(bits);
  } catch (const ConfigError& e) {
    throw MalformedCheckpointError(e.what());
  }
  for (std::size_t s = 0; s < alphas.size(); ++s) {
    if (!(alphas[s] >= QuantizerState::kMinAlpha) || !std::isfinite(alphas[s])) {
      throw MalformedCheckpointError("site " + std::to_string(s) + " has invalid alpha");
    }
    model.set_alpha(s, alphas[s]);
  }
  std::string echo = r.str();
  if (!r.done()) throw MalformedCheckpointError("trailing bytes after checkpoint");
  return {std::move(model), std::move(echo)};
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

}  // namespace cat
