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

// Shard files: a recorded stream of DRSM messages from one producer.
//
//   'D' 'R' 'S' 'H' | version u8 (=1) | frames... | u32 0 | u64 message count
//
// Each frame is the usual u32 length + DRSM payload. A DRSM payload is never
// empty, so the zero length marks the trailer.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "randstream/wire.hpp"

namespace randstream::shard {

inline constexpr std::uint8_t kVersion = 1;

class ShardWriter {
 public:
  /// Throws std::runtime_error if the file cannot be created.
  explicit ShardWriter(const std::filesystem::path& path);
  ~ShardWriter();

  void write(const wire::Message& m);
  void write_payload(std::span<const std::uint8_t> payload);
  /// Writes the trailer. Idempotent; the destructor calls it too.
  void close();
  std::uint64_t count() const { return count_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t count_ = 0;
  bool closed_ = false;
};

void write_shard(const std::filesystem::path& path, std::span<const wire::Message> messages);

/// Throws wire::WireError (kBadMagic, kBadVersion, kTruncated, kTrailingBytes
/// or a decode error) and std::runtime_error if the file cannot be read.
std::vector<std::vector<std::uint8_t>> read_shard_payloads(const std::filesystem::path& path);
std::vector<wire::Message> read_shard(const std::filesystem::path& path);

}  // namespace randstream::shard
