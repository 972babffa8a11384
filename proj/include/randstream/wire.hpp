// Copyright 2026 The randstream Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// DRSM v1: self-describing binary messages.
//
// Payload layout (all integers little-endian):
//
//   'D' 'R' | version u8 (=1) | entry count u16 | entries...
//   entry   = key length u8 | key bytes | tag u8 | value
//   0x01 U64 (8B)   0x02 I64 (8B)   0x03 F64 (8B, IEEE-754)
//   0x04 Str  (u32 length + UTF-8 bytes)
//   0x05 Blob (u32 length + bytes)
//   0x06 Tensor (dtype u8 | rank u8 | rank x u32 dims | raw row-major data)
//
// On a byte stream every payload is preceded by its u32 length.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace randstream::wire {

static_assert(std::endian::native == std::endian::little,
              "tensor storage assumes a little-endian host");

inline constexpr std::uint8_t kMagic0 = 0x44;  // 'D'
inline constexpr std::uint8_t kMagic1 = 0x52;  // 'R'
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kMaxKeyLength = 255;
inline constexpr std::size_t kMaxRank = 8;
inline constexpr std::size_t kMaxEntries = 0xFFFF;
inline constexpr std::uint64_t kMaxSectionBytes = 0xFFFFFFFFull;

enum class WireErrc {
  kKeyTooLong,
  kTooManyEntries,
  kUnsupportedRank,
  kTensorTooLarge,
  kTensorShapeMismatch,
  kStringTooLong,
  kDuplicateKey,
  kBadMagic,
  kBadVersion,
  kBadTag,
  kBadDType,
  kTruncated,
  kTrailingBytes,
  kInvalidUtf8,
  kMissingHeader,
};

const char* to_string(WireErrc code);

class WireError : public std::runtime_error {
 public:
  WireError(WireErrc code, const std::string& detail);
  WireErrc code() const noexcept { return code_; }

 private:
  WireErrc code_;
};

enum class DType : std::uint8_t { kU8 = 0x00, kF32 = 0x01, kI64 = 0x02 };

std::size_t element_size(DType dtype);
const char* to_string(DType dtype);

/// Row-major n-d array. `data` holds the raw little-endian element bytes.
struct Tensor {
  DType dtype = DType::kU8;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  std::uint64_t element_count() const;

  static Tensor u8(std::vector<std::uint32_t> dims, std::span<const std::uint8_t> values);
  static Tensor f32(std::vector<std::uint32_t> dims, std::span<const float> values);
  static Tensor i64(std::vector<std::uint32_t> dims, std::span<const std::int64_t> values);

  // Element copies; throw std::logic_error on dtype mismatch.
  std::vector<float> as_f32() const;
  std::vector<std::int64_t> as_i64() const;

  bool operator==(const Tensor&) const = default;
};

struct Blob {
  std::vector<std::uint8_t> bytes;
  bool operator==(const Blob&) const = default;
};

using Value = std::variant<std::uint64_t, std::int64_t, double, std::string, Blob, Tensor>;

/// Bitwise comparison: F64 values compare by bit pattern so NaN payloads
/// and signed zeros round-trip observably.
bool same_value(const Value& a, const Value& b);

/// Ordered key -> Value map. Insertion order is the wire order.
class Message {
 public:
  using Entry = std::pair<std::string, Value>;

  Message() = default;

  /// Replaces the value in place if `key` exists, otherwise appends.
  Message& set(std::string key, Value value);
  /// Appends; throws WireError(kDuplicateKey) if `key` exists.
  Message& append(std::string key, Value value);

  const Value* find(std::string_view key) const;
  bool contains(std::string_view key) const { return find(key) != nullptr; }

  template <typename T>
  const T* get_if(std::string_view key) const {
    const Value* v = find(key);
    return v ? std::get_if<T>(v) : nullptr;
  }

  // Typed accessors that throw std::out_of_range when absent or mistyped.
  std::uint64_t u64(std::string_view key) const;
  double f64(std::string_view key) const;
  const std::string& str(std::string_view key) const;
  const Tensor& tensor(std::string_view key) const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  friend bool operator==(const Message& a, const Message& b);

 private:
  std::vector<Entry> entries_;
};

std::vector<std::uint8_t> encode_message(const Message& m);
Message decode_message(std::span<const std::uint8_t> payload);

/// Throws WireError(kMissingHeader) unless `btid` and `frame` are present as U64.
void validate_stream_header(const Message& m);

/// u32 length prefix + payload.
std::vector<std::uint8_t> frame_payload(std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> encode_framed(const Message& m);

bool is_valid_utf8(std::string_view s);

}  // namespace randstream::wire
