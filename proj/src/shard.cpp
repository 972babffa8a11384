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

#include "randstream/shard.hpp"

#include <cstring>
#include <iterator>
#include <stdexcept>

namespace randstream::shard {

namespace {

constexpr char kMagic[4] = {'D', 'R', 'S', 'H'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

ShardWriter::ShardWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot create shard " + path.string());
  out_.write(kMagic, 4);
  put<std::uint8_t>(out_, kVersion);
}

ShardWriter::~ShardWriter() {
  try {
    close();
  } catch (const std::exception&) {
  }
}

void ShardWriter::write(const wire::Message& m) { write_payload(wire::encode_message(m)); }

void ShardWriter::write_payload(std::span<const std::uint8_t> payload) {
  if (closed_) throw std::logic_error("shard already closed");
  if (payload.empty()) throw std::invalid_argument("empty payload");
  put<std::uint32_t>(out_, static_cast<std::uint32_t>(payload.size()));
  out_.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  ++count_;
}

void ShardWriter::close() {
  if (closed_) return;
  closed_ = true;
  put<std::uint32_t>(out_, 0);
  put<std::uint64_t>(out_, count_);
  out_.close();
  if (!out_) throw std::runtime_error("error writing shard " + path_.string());
}

void write_shard(const std::filesystem::path& path, std::span<const wire::Message> messages) {
  ShardWriter w(path);
  for (const auto& m : messages) w.write(m);
  w.close();
}

std::vector<std::vector<std::uint8_t>> read_shard_payloads(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open shard " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  auto need = [&](std::size_t n, const char* what) {
    if (bytes.size() - pos < n) throw wire::WireError(wire::WireErrc::kTruncated, std::string("shard ends inside ") + what);
  };
  auto u32 = [&] {
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  };

  need(5, "header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw wire::WireError(wire::WireErrc::kBadMagic, "not a shard file");
  if (bytes[4] != kVersion) {
    throw wire::WireError(wire::WireErrc::kBadVersion, "shard version " + std::to_string(bytes[4]));
  }
  pos = 5;

  std::vector<std::vector<std::uint8_t>> out;
  while (true) {
    need(4, "frame length");
    const std::uint32_t len = u32();
    if (len == 0) break;
    need(len, "frame");
    out.emplace_back(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  need(8, "trailer");
  std::uint64_t count;
  std::memcpy(&count, bytes.data() + pos, 8);
  pos += 8;
  if (pos != bytes.size()) throw wire::WireError(wire::WireErrc::kTrailingBytes, "bytes after shard trailer");
  if (count != out.size()) {
    throw wire::WireError(wire::WireErrc::kTruncated, "trailer lists " + std::to_string(count) + " messages, found " +
                                                          std::to_string(out.size()));
  }
  return out;
}

std::vector<wire::Message> read_shard(const std::filesystem::path& path) {
  std::vector<wire::Message> out;
  for (const auto& p : read_shard_payloads(path)) out.push_back(wire::decode_message(p));
  return out;
}

}  // namespace randstream::shard
