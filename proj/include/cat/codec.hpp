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
#include <span>
#include <string>
#include <vector>

#include "cat/entropy.hpp"
#include "cat/errors.hpp"

namespace cat {

// Canonical prefix code over symbols 0..L-1. A length of 0 marks a symbol
// that cannot be coded.
class HuffmanCodebook {
 public:
  static constexpr unsigned kMaxCodeLength = 63;

  enum class DecodeStatus { kOk, kEndOfInput, kInvalidCode };

  HuffmanCodebook() = default;

  // Optimal code for the histogram. Merge ties break on (count, lowest
  // symbol index); a single present symbol gets length 1.
  static HuffmanCodebook build(const Histogram& h);

  // Rebuilds the canonical code from lengths alone. Throws
  // MalformedStreamError(kInvalidCodeLengths) unless the lengths describe a
  // complete prefix code (or a single symbol of length 1).
  static HuffmanCodebook from_lengths(std::vector<std::uint8_t> lengths);

  std::size_t num_symbols() const { return lengths_.size(); }
  std::span<const std::uint8_t> lengths() const { return lengths_; }
  unsigned length(std::size_t symbol) const { return lengths_.at(symbol); }
  // Code bits right-aligned; the top bit of a length-l code is bit l-1.
  std::uint64_t code(std::size_t symbol) const { return codes_.at(symbol); }

  // sum_i counts_i * len_i / total.
  double expected_length(const Histogram& h) const;

  // Decodes one symbol, reading bits MSB-first from `bytes` starting at
  // `bit_pos`.
  DecodeStatus decode_one(std::span<const std::uint8_t> bytes, std::uint64_t& bit_pos, std::uint16_t& symbol) const;

 private:
  explicit HuffmanCodebook(std::vector<std::uint8_t> lengths);

  std::vector<std::uint8_t> lengths_;
  std::vector<std::uint64_t> codes_;
  // Canonical decode tables indexed by code length.
  std::vector<std::uint64_t> first_code_;
  std::vector<std::uint64_t> length_count_;
  std::vector<std::size_t> first_index_;
  std::vector<std::uint16_t> sorted_symbols_;
  unsigned max_length_ = 0;
};

class MalformedStreamError : public DataError {
 public:
  enum class Kind {
    kBadMagic,
    kUnsupportedVersion,
    kTruncatedHeader,
    kInvalidHeader,
    kInvalidCodeLengths,
    kTruncatedPayload,
    kInvalidCode,
    kNonzeroPadding,
    kTrailingBytes,
  };

  MalformedStreamError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// One compressed feature map: header fields plus MSB-first packed payload.
struct EncodedStream {
  static constexpr std::uint8_t kVersion = 1;

  std::uint8_t bits = 8;
  HuffmanCodebook codebook;
  std::uint64_t count = 0;
  std::uint64_t payload_bits = 0;
  std::vector<std::uint8_t> payload;

  std::size_t header_bytes() const { return 4 + 1 + 1 + 2 + codebook.num_symbols() + 8; }

  // "CATC" | version u8 | bits u8 | L u16 LE | lengths L x u8 | N u64 LE | payload
  std::vector<std::uint8_t> serialize() const;
  // Parses and fully validates, including a trial decode of the payload.
  static EncodedStream parse(std::span<const std::uint8_t> bytes);
};

// Throws CodebookMismatchError for a symbol without a code.
EncodedStream encode(std::span<const std::uint16_t> symbols, const HuffmanCodebook& codebook, int bits);

std::vector<std::uint16_t> decode(const EncodedStream& stream);
std::vector<std::uint16_t> decode(std::span<const std::uint8_t> bytes);

// Payload bits per symbol, header excluded. Throws UndefinedRateError for N=0.
double measured_rate(const EncodedStream& stream);

// Builds the codebook from the symbols' own histogram and encodes them.
EncodedStream compress(std::span<const std::uint16_t> symbols, std::size_t num_symbols, int bits);

}  // namespace cat
