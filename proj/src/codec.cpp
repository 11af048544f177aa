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

#include "cat/codec.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <queue>
#include <tuple>

namespace cat {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'C', 'A', 'T', 'C'};

using Kind = MalformedStreamError::Kind;

struct Node {
  std::uint64_t count;
  std::uint16_t min_symbol;
  int left = -1;
  int right = -1;
};

class BitWriter {
 public:
  void put(std::uint64_t code, unsigned length) {
    for (unsigned i = length; i-- > 0;) {
      if (used_ == 0) bytes_.push_back(0);
      if ((code >> i) & 1U) bytes_.back() |= static_cast<std::uint8_t>(0x80U >> used_);
      used_ = (used_ + 1) & 7U;
    }
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  unsigned used_ = 0;
};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

// Checks the bits left over after the last symbol. `bit_pos` is the first
// unused bit of `payload`.
void check_tail(std::span<const std::uint8_t> payload, std::uint64_t bit_pos) {
  const std::uint64_t used_bytes = (bit_pos + 7) / 8;
  if (payload.size() > used_bytes) {
    throw MalformedStreamError(Kind::kTrailingBytes, "stream has " + std::to_string(payload.size() - used_bytes) +
                                                         " bytes after the last symbol");
  }
  const unsigned rem = static_cast<unsigned>(bit_pos % 8);
  if (rem != 0) {
    const std::uint8_t mask = static_cast<std::uint8_t>(0xFFU >> rem);
    if (payload[used_bytes - 1] & mask) throw MalformedStreamError(Kind::kNonzeroPadding, "nonzero pad bits in final byte");
  }
}

std::vector<std::uint16_t> decode_payload(const HuffmanCodebook& codebook, std::uint64_t count,
                                          std::span<const std::uint8_t> payload, std::uint64_t* bits_used) {
  std::vector<std::uint16_t> out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, payload.size() * 8ULL + 1)));
  std::uint64_t pos = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint16_t sym = 0;
    const auto status = codebook.decode_one(payload, pos, sym);
    if (status == HuffmanCodebook::DecodeStatus::kEndOfInput) {
      throw MalformedStreamError(Kind::kTruncatedPayload, "payload ends after " + std::to_string(i) + " of " +
                                                              std::to_string(count) + " symbols");
    }
    if (status == HuffmanCodebook::DecodeStatus::kInvalidCode) {
      throw MalformedStreamError(Kind::kInvalidCode, "no code matches the bits of symbol " + std::to_string(i));
    }
    out.push_back(sym);
  }
  check_tail(payload, pos);
  if (bits_used) *bits_used = pos;
  return out;
}

}  // namespace

HuffmanCodebook::HuffmanCodebook(std::vector<std::uint8_t> lengths) : lengths_(std::move(lengths)) {
  codes_.assign(lengths_.size(), 0);
  max_length_ = lengths_.empty() ? 0 : *std::max_element(lengths_.begin(), lengths_.end());
  for (std::size_t s = 0; s < lengths_.size(); ++s) {
    if (lengths_[s] > 0) sorted_symbols_.push_back(static_cast<std::uint16_t>(s));
  }
  std::stable_sort(sorted_symbols_.begin(), sorted_symbols_.end(),
                   [&](std::uint16_t a, std::uint16_t b) { return lengths_[a] < lengths_[b]; });

  first_code_.assign(max_length_ + 1, 0);
  length_count_.assign(max_length_ + 1, 0);
  first_index_.assign(max_length_ + 1, 0);
  for (std::uint16_t s : sorted_symbols_) ++length_count_[lengths_[s]];

  std::uint64_t code = 0;
  std::size_t index = 0;
  for (unsigned len = 1; len <= max_length_; ++len) {
    first_code_[len] = code;
    first_index_[len] = index;
    for (std::uint64_t k = 0; k < length_count_[len]; ++k) codes_[sorted_symbols_[index + k]] = code + k;
    code = (code + length_count_[len]) << 1;
    index += length_count_[len];
  }
}

HuffmanCodebook HuffmanCodebook::build(const Histogram& h) {
  if (h.total() == 0) throw InputError("build_codebook: empty histogram");
  if (h.num_symbols() > 65535) throw InputError("build_codebook: alphabet larger than 65535 symbols");

  std::vector<Node> nodes;
  for (std::size_t s = 0; s < h.num_symbols(); ++s) {
    if (h.counts[s] > 0) nodes.push_back({h.counts[s], static_cast<std::uint16_t>(s)});
  }
  std::vector<std::uint8_t> lengths(h.num_symbols(), 0);
  if (nodes.size() == 1) {
    lengths[nodes[0].min_symbol] = 1;
    return HuffmanCodebook(std::move(lengths));
  }

  auto later = [&nodes](int a, int b) {
    return std::tie(nodes[a].count, nodes[a].min_symbol) > std::tie(nodes[b].count, nodes[b].min_symbol);
  };
  std::priority_queue<int, std::vector<int>, decltype(later)> queue(later);
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) queue.push(i);
  while (queue.size() > 1) {
    const int a = queue.top();
    queue.pop();
    const int b = queue.top();
    queue.pop();
    nodes.push_back({nodes[a].count + nodes[b].count, std::min(nodes[a].min_symbol, nodes[b].min_symbol), a, b});
    queue.push(static_cast<int>(nodes.size()) - 1);
  }

  std::vector<std::pair<int, unsigned>> stack{{queue.top(), 0U}};
  while (!stack.empty()) {
    auto [id, depth] = stack.back();
    stack.pop_back();
    const Node& n = nodes[id];
    if (n.left < 0) {
      if (depth > kMaxCodeLength) throw InputError("build_codebook: code length exceeds 63 bits");
      lengths[n.min_symbol] = static_cast<std::uint8_t>(depth);
      continue;
    }
    stack.push_back({n.left, depth + 1});
    stack.push_back({n.right, depth + 1});
  }
  return HuffmanCodebook(std::move(lengths));
}

HuffmanCodebook HuffmanCodebook::from_lengths(std::vector<std::uint8_t> lengths) {
  std::size_t present = 0;
  unsigned max_len = 0;
  for (std::uint8_t l : lengths) {
    if (l == 0) continue;
    ++present;
    max_len = std::max<unsigned>(max_len, l);
  }
  if (present == 0) throw MalformedStreamError(Kind::kInvalidCodeLengths, "codebook has no coded symbols");
  if (max_len > kMaxCodeLength) {
    throw MalformedStreamError(Kind::kInvalidCodeLengths, "code length " + std::to_string(max_len) + " exceeds 63");
  }
  if (present == 1) {
    if (max_len != 1) throw MalformedStreamError(Kind::kInvalidCodeLengths, "single-symbol code must have length 1");
    return HuffmanCodebook(std::move(lengths));
  }
  // Kraft sum scaled by 2^max_len must be exactly 2^max_len.
  std::uint64_t kraft = 0;
  const std::uint64_t full = std::uint64_t{1} << max_len;
  for (std::uint8_t l : lengths) {
    if (l == 0) continue;
    kraft += std::uint64_t{1} << (max_len - l);
    if (kraft > full) throw MalformedStreamError(Kind::kInvalidCodeLengths, "code lengths oversubscribe the code space");
  }
  if (kraft != full) throw MalformedStreamError(Kind::kInvalidCodeLengths, "code lengths leave the code space incomplete");
  return HuffmanCodebook(std::move(lengths));
}

double HuffmanCodebook::expected_length(const Histogram& h) const {
  const std::uint64_t total = h.total();
  if (total == 0) throw InputError("expected_length: empty histogram");
  if (h.num_symbols() != num_symbols()) throw InputError("expected_length: alphabet size mismatch");
  std::uint64_t bits = 0;
  for (std::size_t s = 0; s < num_symbols(); ++s) {
    if (h.counts[s] > 0 && lengths_[s] == 0) {
      throw CodebookMismatchError("expected_length: symbol " + std::to_string(s) + " has no code");
    }
    bits += h.counts[s] * lengths_[s];
  }
  return static_cast<double>(bits) / static_cast<double>(total);
}

HuffmanCodebook::DecodeStatus HuffmanCodebook::decode_one(std::span<const std::uint8_t> bytes,
                                                          std::uint64_t& bit_pos, std::uint16_t& symbol) const {
  std::uint64_t code = 0;
  const std::uint64_t limit = static_cast<std::uint64_t>(bytes.size()) * 8;
  for (unsigned len = 1; len <= max_length_; ++len) {
    if (bit_pos >= limit) return DecodeStatus::kEndOfInput;
    const unsigned bit = (bytes[bit_pos >> 3] >> (7 - (bit_pos & 7))) & 1U;
    ++bit_pos;
    code = (code << 1) | bit;
    const std::uint64_t offset = code - first_code_[len];
    if (code >= first_code_[len] && offset < length_count_[len]) {
      symbol = sorted_symbols_[first_index_[len] + offset];
      return DecodeStatus::kOk;
    }
  }
  // Only reachable for the single-symbol code, whose one codeword is "0".
  return DecodeStatus::kInvalidCode;
}

std::vector<std::uint8_t> EncodedStream::serialize() const {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  out.push_back(kVersion);
  out.push_back(bits);
  put_u16(out, static_cast<std::uint16_t>(codebook.num_symbols()));
  auto lengths = codebook.lengths();
  out.insert(out.end(), lengths.begin(), lengths.end());
  put_u64(out, count);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

EncodedStream EncodedStream::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw MalformedStreamError(Kind::kTruncatedHeader, "stream shorter than its fixed header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw MalformedStreamError(Kind::kBadMagic, "bad magic, expected \"CATC\"");
  }
  if (bytes[4] != kVersion) {
    throw MalformedStreamError(Kind::kUnsupportedVersion, "unsupported stream version " + std::to_string(bytes[4]));
  }
  const std::uint8_t bits = bytes[5];
  const std::size_t num_symbols = static_cast<std::size_t>(bytes[6]) | (static_cast<std::size_t>(bytes[7]) << 8);
  if (bits < 1 || bits > 8) throw MalformedStreamError(Kind::kInvalidHeader, "bit-width must be in [1, 8]");
  if (num_symbols == 0 || num_symbols > (std::size_t{1} << bits)) {
    throw MalformedStreamError(Kind::kInvalidHeader, "alphabet size " + std::to_string(num_symbols) +
                                                         " inconsistent with bit-width " + std::to_string(bits));
  }
  const std::size_t header = 8 + num_symbols + 8;
  if (bytes.size() < header) throw MalformedStreamError(Kind::kTruncatedHeader, "stream ends inside the header");

  std::vector<std::uint8_t> lengths(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(num_symbols));
  std::uint64_t count = 0;
  for (int i = 0; i < 8; ++i) count |= static_cast<std::uint64_t>(bytes[8 + num_symbols + i]) << (8 * i);

  EncodedStream s{bits, HuffmanCodebook::from_lengths(std::move(lengths)), count, 0,
                  std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end())};
  decode_payload(s.codebook, s.count, s.payload, &s.payload_bits);
  return s;
}

EncodedStream encode(std::span<const std::uint16_t> symbols, const HuffmanCodebook& codebook, int bits) {
  if (bits < 1 || bits > 8) throw InputError("encode: bit-width must be in [1, 8]");
  if (codebook.num_symbols() > (std::size_t{1} << bits)) {
    throw InputError("encode: codebook of " + std::to_string(codebook.num_symbols()) +
                     " symbols does not fit bit-width " + std::to_string(bits));
  }
  BitWriter writer;
  std::uint64_t total_bits = 0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const std::uint16_t s = symbols[i];
    if (s >= codebook.num_symbols() || codebook.length(s) == 0) {
      throw CodebookMismatchError("encode: symbol " + std::to_string(s) + " at position " + std::to_string(i) +
                                  " has no code");
    }
    writer.put(codebook.code(s), codebook.length(s));
    total_bits += codebook.length(s);
  }
  return EncodedStream{static_cast<std::uint8_t>(bits), codebook, symbols.size(), total_bits, writer.take()};
}

std::vector<std::uint16_t> decode(const EncodedStream& stream) {
  return decode_payload(stream.codebook, stream.count, stream.payload, nullptr);
}

std::vector<std::uint16_t> decode(std::span<const std::uint8_t> bytes) { return decode(EncodedStream::parse(bytes)); }

double measured_rate(const EncodedStream& stream) {
  if (stream.count == 0) throw UndefinedRateError("measured_rate: stream holds no symbols");
  return static_cast<double>(stream.payload_bits) / static_cast<double>(stream.count);
}

EncodedStream compress(std::span<const std::uint16_t> symbols, std::size_t num_symbols, int bits) {
  const Histogram h = Histogram::of(symbols, num_symbols);
  return encode(symbols, HuffmanCodebook::build(h), bits);
}

}  // namespace cat
