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

#include "randstream/wire.hpp"

#include <cstring>

namespace randstream::wire {

namespace {

enum Tag : std::uint8_t {
  kTagU64 = 0x01,
  kTagI64 = 0x02,
  kTagF64 = 0x03,
  kTagStr = 0x04,
  kTagBlob = 0x05,
  kTagTensor = 0x06,
};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  const std::size_t at = out.size();
  out.resize(at + sizeof(T));
  std::memcpy(out.data() + at, &v, sizeof(T));
}

std::uint64_t tensor_bytes(const Tensor& t) {
  // Saturates instead of wrapping so oversize shapes are rejected, not aliased.
  const std::uint64_t esize = element_size(t.dtype);
  std::uint64_t n = esize;
  for (std::uint32_t d : t.dims) {
    if (d == 0) return 0;
    if (n > kMaxSectionBytes / d) return kMaxSectionBytes + 1;
    n *= d;
  }
  return n;
}

void check_tensor(const Tensor& t) {
  if (t.dims.empty() || t.dims.size() > kMaxRank) {
    throw WireError(WireErrc::kUnsupportedRank, "rank " + std::to_string(t.dims.size()));
  }
  const std::uint64_t n = tensor_bytes(t);
  if (n > kMaxSectionBytes) throw WireError(WireErrc::kTensorTooLarge, "tensor exceeds 2^32-1 bytes");
  if (n != t.data.size()) {
    throw WireError(WireErrc::kTensorShapeMismatch,
                    "expected " + std::to_string(n) + " data bytes, have " + std::to_string(t.data.size()));
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw WireError(WireErrc::kTruncated, std::string("payload ends inside ") + what);
    }
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  template <typename T>
  T get(const char* what) {
    T v;
    std::memcpy(&v, take(sizeof(T), what).data(), sizeof(T));
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const char* to_string(WireErrc code) {
  switch (code) {
    case WireErrc::kKeyTooLong: return "KeyTooLong";
    case WireErrc::kTooManyEntries: return "TooManyEntries";
    case WireErrc::kUnsupportedRank: return "UnsupportedRank";
    case WireErrc::kTensorTooLarge: return "TensorTooLarge";
    case WireErrc::kTensorShapeMismatch: return "TensorShapeMismatch";
    case WireErrc::kStringTooLong: return "StringTooLong";
    case WireErrc::kDuplicateKey: return "DuplicateKey";
    case WireErrc::kBadMagic: return "BadMagic";
    case WireErrc::kBadVersion: return "BadVersion";
    case WireErrc::kBadTag: return "BadTag";
    case WireErrc::kBadDType: return "BadDType";
    case WireErrc::kTruncated: return "Truncated";
    case WireErrc::kTrailingBytes: return "TrailingBytes";
    case WireErrc::kInvalidUtf8: return "InvalidUtf8";
    case WireErrc::kMissingHeader: return "MissingHeader";
  }
  return "Unknown";
}

WireError::WireError(WireErrc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

std::size_t element_size(DType dtype) {
  switch (dtype) {
    case DType::kU8: return 1;
    case DType::kF32: return 4;
    case DType::kI64: return 8;
  }
  throw WireError(WireErrc::kBadDType, "unknown dtype");
}

const char* to_string(DType dtype) {
  switch (dtype) {
    case DType::kU8: return "u8";
    case DType::kF32: return "f32";
    case DType::kI64: return "i64";
  }
  return "?";
}

std::uint64_t Tensor::element_count() const {
  std::uint64_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

namespace {

template <typename T>
Tensor make_tensor(DType dtype, std::vector<std::uint32_t> dims, std::span<const T> values) {
  Tensor t;
  t.dtype = dtype;
  t.dims = std::move(dims);
  if (t.element_count() != values.size()) {
    throw WireError(WireErrc::kTensorShapeMismatch, "value count does not match dims");
  }
  t.data.resize(values.size_bytes());
  if (!values.empty()) std::memcpy(t.data.data(), values.data(), values.size_bytes());
  return t;
}

template <typename T>
std::vector<T> copy_elements(const Tensor& t, DType want) {
  if (t.dtype != want) throw std::logic_error(std::string("tensor dtype is ") + to_string(t.dtype));
  std::vector<T> out(t.data.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), t.data.data(), out.size() * sizeof(T));
  return out;
}

}  // namespace

Tensor Tensor::u8(std::vector<std::uint32_t> dims, std::span<const std::uint8_t> values) {
  return make_tensor(DType::kU8, std::move(dims), values);
}
Tensor Tensor::f32(std::vector<std::uint32_t> dims, std::span<const float> values) {
  return make_tensor(DType::kF32, std::move(dims), values);
}
Tensor Tensor::i64(std::vector<std::uint32_t> dims, std::span<const std::int64_t> values) {
  return make_tensor(DType::kI64, std::move(dims), values);
}

std::vector<float> Tensor::as_f32() const { return copy_elements<float>(*this, DType::kF32); }
std::vector<std::int64_t> Tensor::as_i64() const { return copy_elements<std::int64_t>(*this, DType::kI64); }

bool same_value(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  if (const double* da = std::get_if<double>(&a)) {
    return std::bit_cast<std::uint64_t>(*da) == std::bit_cast<std::uint64_t>(std::get<double>(b));
  }
  return a == b;
}

Message& Message::set(std::string key, Value value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return *this;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
  return *this;
}

Message& Message::append(std::string key, Value value) {
  if (contains(key)) throw WireError(WireErrc::kDuplicateKey, key);
  entries_.emplace_back(std::move(key), std::move(value));
  return *this;
}

const Value* Message::find(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

namespace {
template <typename T>
const T& typed(const Message& m, std::string_view key) {
  const T* v = m.get_if<T>(key);
  if (!v) throw std::out_of_range("message has no suitably typed key '" + std::string(key) + "'");
  return *v;
}
}  // namespace

std::uint64_t Message::u64(std::string_view key) const { return typed<std::uint64_t>(*this, key); }
double Message::f64(std::string_view key) const { return typed<double>(*this, key); }
const std::string& Message::str(std::string_view key) const { return typed<std::string>(*this, key); }
const Tensor& Message::tensor(std::string_view key) const { return typed<Tensor>(*this, key); }

bool operator==(const Message& a, const Message& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    if (a.entries_[i].first != b.entries_[i].first) return false;
    if (!same_value(a.entries_[i].second, b.entries_[i].second)) return false;
  }
  return true;
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (s.size() - i < len) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates, out-of-range.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

namespace {

void encode_into(const Message& m, std::vector<std::uint8_t>& out) {
  if (m.size() > kMaxEntries) throw WireError(WireErrc::kTooManyEntries, std::to_string(m.size()));
  std::size_t hint = 5;
  for (const auto& [key, value] : m.entries()) {
    hint += key.size() + 16;
    if (const auto* t = std::get_if<Tensor>(&value)) hint += t->data.size() + 4 * t->dims.size();
  }
  out.reserve(out.size() + hint);
  out.push_back(kMagic0);
  out.push_back(kMagic1);
  out.push_back(kVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(m.size()));

  for (const auto& [key, value] : m.entries()) {
    if (key.size() > kMaxKeyLength) throw WireError(WireErrc::kKeyTooLong, key.substr(0, 32) + "...");
    out.push_back(static_cast<std::uint8_t>(key.size()));
    out.insert(out.end(), key.begin(), key.end());

    std::visit(
        [&out](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::uint64_t>) {
            out.push_back(kTagU64);
            put_le(out, v);
          } else if constexpr (std::is_same_v<T, std::int64_t>) {
            out.push_back(kTagI64);
            put_le(out, v);
          } else if constexpr (std::is_same_v<T, double>) {
            out.push_back(kTagF64);
            put_le(out, v);
          } else if constexpr (std::is_same_v<T, std::string>) {
            if (v.size() > kMaxSectionBytes) throw WireError(WireErrc::kStringTooLong, "string");
            if (!is_valid_utf8(v)) throw WireError(WireErrc::kInvalidUtf8, "string value");
            out.push_back(kTagStr);
            put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.size()));
            out.insert(out.end(), v.begin(), v.end());
          } else if constexpr (std::is_same_v<T, Blob>) {
            if (v.bytes.size() > kMaxSectionBytes) throw WireError(WireErrc::kStringTooLong, "blob");
            out.push_back(kTagBlob);
            put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.bytes.size()));
            out.insert(out.end(), v.bytes.begin(), v.bytes.end());
          } else {
            check_tensor(v);
            out.push_back(kTagTensor);
            out.push_back(static_cast<std::uint8_t>(v.dtype));
            out.push_back(static_cast<std::uint8_t>(v.dims.size()));
            for (std::uint32_t d : v.dims) put_le(out, d);
            out.insert(out.end(), v.data.begin(), v.data.end());
          }
        },
        value);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_message(const Message& m) {
  std::vector<std::uint8_t> out;
  encode_into(m, out);
  return out;
}

Message decode_message(std::span<const std::uint8_t> payload) {
  Reader r(payload);
  auto magic = r.take(2, "magic");
  if (magic[0] != kMagic0 || magic[1] != kMagic1) throw WireError(WireErrc::kBadMagic, "not a DRSM payload");
  const auto version = r.get<std::uint8_t>("version");
  if (version != kVersion) throw WireError(WireErrc::kBadVersion, std::to_string(version));
  const auto count = r.get<std::uint16_t>("entry count");

  Message m;
  for (std::uint16_t i = 0; i < count; ++i) {
    const auto key_len = r.get<std::uint8_t>("key length");
    auto key_bytes = r.take(key_len, "key");
    std::string key(key_bytes.begin(), key_bytes.end());
    if (!is_valid_utf8(key)) throw WireError(WireErrc::kInvalidUtf8, "key");
    if (m.contains(key)) throw WireError(WireErrc::kDuplicateKey, key);

    const auto tag = r.get<std::uint8_t>("tag");
    Value value;
    switch (tag) {
      case kTagU64: value = r.get<std::uint64_t>("u64"); break;
      case kTagI64: value = r.get<std::int64_t>("i64"); break;
      case kTagF64: value = r.get<double>("f64"); break;
      case kTagStr: {
        const auto n = r.get<std::uint32_t>("string length");
        auto bytes = r.take(n, "string");
        std::string s(bytes.begin(), bytes.end());
        if (!is_valid_utf8(s)) throw WireError(WireErrc::kInvalidUtf8, "value of '" + key + "'");
        value = std::move(s);
        break;
      }
      case kTagBlob: {
        const auto n = r.get<std::uint32_t>("blob length");
        auto bytes = r.take(n, "blob");
        value = Blob{{bytes.begin(), bytes.end()}};
        break;
      }
      case kTagTensor: {
        Tensor t;
        const auto dtype = r.get<std::uint8_t>("dtype");
        if (dtype > static_cast<std::uint8_t>(DType::kI64)) {
          throw WireError(WireErrc::kBadDType, std::to_string(dtype));
        }
        t.dtype = static_cast<DType>(dtype);
        const auto rank = r.get<std::uint8_t>("rank");
        if (rank == 0 || rank > kMaxRank) throw WireError(WireErrc::kUnsupportedRank, std::to_string(rank));
        t.dims.resize(rank);
        for (auto& d : t.dims) d = r.get<std::uint32_t>("dims");
        const std::uint64_t n = tensor_bytes(t);
        if (n > kMaxSectionBytes) throw WireError(WireErrc::kTensorTooLarge, "declared shape");
        auto bytes = r.take(static_cast<std::size_t>(n), "tensor data");
        t.data.assign(bytes.begin(), bytes.end());
        value = std::move(t);
        break;
      }
      default:
        throw WireError(WireErrc::kBadTag, std::to_string(tag));
    }
    m.append(std::move(key), std::move(value));
  }
  if (!r.done()) throw WireError(WireErrc::kTrailingBytes, "bytes after last entry");
  return m;
}

void validate_stream_header(const Message& m) {
  if (!m.get_if<std::uint64_t>("btid")) throw WireError(WireErrc::kMissingHeader, "btid (U64) required");
  if (!m.get_if<std::uint64_t>("frame")) throw WireError(WireErrc::kMissingHeader, "frame (U64) required");
}

std::vector<std::uint8_t> frame_payload(std::span<const std::uint8_t> payload) {
  if (payload.size() > kMaxSectionBytes) throw WireError(WireErrc::kTensorTooLarge, "payload exceeds u32 frame");
  std::vector<std::uint8_t> out;
  out.reserve(payload.size() + 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::vector<std::uint8_t> encode_framed(const Message& m) {
  // Encoded behind a length placeholder so large images are copied once.
  std::vector<std::uint8_t> out(4, 0);
  encode_into(m, out);
  const std::uint64_t body = out.size() - 4;
  if (body > kMaxSectionBytes) throw WireError(WireErrc::kTensorTooLarge, "payload exceeds u32 frame");
  const auto len = static_cast<std::uint32_t>(body);
  std::memcpy(out.data(), &len, 4);
  return out;
}

}  // namespace randstream::wire
