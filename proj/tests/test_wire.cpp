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

#include <doctest.h>

#include <bit>
#include <cstring>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <random>

#include "randstream/wire.hpp"
#include "test_util.hpp"
#include "wire_gen.hpp"

using namespace randstream;
using namespace randstream::wire;

namespace {

std::vector<std::uint8_t> from_hex(const std::string& hex) {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) out.push_back(static_cast<std::uint8_t>(std::stoul(hex.substr(i, 2), nullptr, 16)));
  return out;
}

DType dtype_named(const std::string& s) {
  if (s == "u8") return DType::kU8;
  if (s == "f32") return DType::kF32;
  return DType::kI64;
}

}  // namespace

TEST_SUITE("wire") {
  TEST_CASE("golden fixtures decode to the recorded entries and re-encode byte for byte") {
    const auto dir = test::fixture_dir() / "wire";
    const auto expected = nlohmann::json::parse(std::ifstream(dir / "expected.json"));
    REQUIRE(expected.size() >= 6);
    for (const auto& [name, want] : expected.items()) {
      CAPTURE(name);
      const auto bytes = test::read_bytes(dir / (name + ".bin"));
      REQUIRE(bytes.size() == want["size"].get<std::size_t>());
      const Message m = decode_message(bytes);
      REQUIRE(m.size() == want["entries"].size());
      for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& [key, value] = m.entries()[i];
        const auto& e = want["entries"][i];
        CHECK(key == e["key"].get<std::string>());
        const std::string type = e["type"];
        if (type == "u64") {
          CHECK(std::get<std::uint64_t>(value) == e["value"].get<std::uint64_t>());
        } else if (type == "i64") {
          CHECK(std::get<std::int64_t>(value) == e["value"].get<std::int64_t>());
        } else if (type == "f64") {
          CHECK(std::bit_cast<std::uint64_t>(std::get<double>(value)) == std::stoull(e["bits"].get<std::string>(), nullptr, 16));
        } else if (type == "str") {
          CHECK(std::get<std::string>(value) == e["value"].get<std::string>());
        } else if (type == "blob") {
          CHECK(std::get<Blob>(value).bytes == from_hex(e["hex"]));
        } else {
          const auto& t = std::get<Tensor>(value);
          CHECK(t.dtype == dtype_named(e["dtype"]));
          CHECK(t.dims == e["dims"].get<std::vector<std::uint32_t>>());
          CHECK(t.data == from_hex(e["hex"]));
        }
      }
      CHECK(encode_message(m) == bytes);
    }
  }

  TEST_CASE("header-only message layout") {
    Message m;
    m.append("btid", std::uint64_t{7}).append("frame", std::uint64_t{0});
    const auto bytes = encode_message(m);
    REQUIRE(bytes.size() == 34);
    CHECK(bytes[0] == 0x44);
    CHECK(bytes[1] == 0x52);
    CHECK(bytes[2] == 0x01);
    CHECK(bytes[3] == 2);
    CHECK(bytes[4] == 0);
    CHECK(bytes[5] == 4);
    CHECK(std::string(bytes.begin() + 6, bytes.begin() + 10) == "btid");
    CHECK(bytes[10] == 0x01);
    CHECK(bytes[11] == 7);
  }

  TEST_CASE("randomized messages survive encode and decode") {
    std::mt19937_64 rng(20260101);
    for (int i = 0; i < 1000; ++i) {
      const Message m = test::random_message(rng);
      const auto bytes = encode_message(m);
      const Message back = decode_message(bytes);
      REQUIRE(back == m);
      REQUIRE(encode_message(back) == bytes);
    }
  }

  TEST_CASE("framing prefixes the payload length") {
    Message m;
    m.append("btid", std::uint64_t{1}).append("frame", std::uint64_t{2});
    const auto payload = encode_message(m);
    const auto framed = encode_framed(m);
    REQUIRE(framed.size() == payload.size() + 4);
    std::uint32_t len;
    std::memcpy(&len, framed.data(), 4);
    CHECK(len == payload.size());
    CHECK(std::equal(payload.begin(), payload.end(), framed.begin() + 4));
    CHECK(frame_payload(payload) == framed);
  }

  TEST_CASE("decode rejects malformed payloads") {
    const auto good = test::read_bytes(test::fixture_dir() / "wire" / "all_types.bin");
    auto expect = [](std::vector<std::uint8_t> b, WireErrc code) {
      try {
        decode_message(b);
        FAIL("decoded a malformed payload");
      } catch (const WireError& e) {
        CHECK(e.code() == code);
      }
    };
    auto bad = good;
    bad[0] = 'X';
    expect(bad, WireErrc::kBadMagic);
    bad = good;
    bad[2] = 2;
    expect(bad, WireErrc::kBadVersion);
    for (std::size_t cut = 0; cut < good.size(); ++cut) {
      CAPTURE(cut);
      expect({good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut)}, WireErrc::kTruncated);
    }
    bad = good;
    bad.push_back(0);
    expect(bad, WireErrc::kTrailingBytes);

    // header_only: entry 0 tag sits after len(1) + "btid"(4).
    auto hdr = test::read_bytes(test::fixture_dir() / "wire" / "header_only.bin");
    bad = hdr;
    bad[10] = 0x07;
    expect(bad, WireErrc::kBadTag);
    std::vector<std::uint8_t> dup{0x44, 0x52, 0x01, 2, 0};
    for (int i = 0; i < 2; ++i) {
      dup.push_back(1);
      dup.push_back('k');
      dup.push_back(0x01);
      for (int b = 0; b < 8; ++b) dup.push_back(0);
    }
    expect(dup, WireErrc::kDuplicateKey);

    std::vector<std::uint8_t> utf{0x44, 0x52, 0x01, 1, 0, 1, 's', 0x04, 2, 0, 0, 0, 0xc3, 0x28};
    expect(utf, WireErrc::kInvalidUtf8);

    std::vector<std::uint8_t> dtype{0x44, 0x52, 0x01, 1, 0, 1, 't', 0x06, 0x09, 1, 0, 0, 0, 0};
    expect(dtype, WireErrc::kBadDType);

    std::vector<std::uint8_t> rank0{0x44, 0x52, 0x01, 1, 0, 1, 't', 0x06, 0x00, 0};
    expect(rank0, WireErrc::kUnsupportedRank);
  }

  TEST_CASE("encode rejects values the format cannot carry") {
    auto expect = [](const Message& m, WireErrc code) {
      try {
        encode_message(m);
        FAIL("encoded an invalid message");
      } catch (const WireError& e) {
        CHECK(e.code() == code);
      }
    };
    Message m;
    m.append(std::string(256, 'k'), std::uint64_t{1});
    expect(m, WireErrc::kKeyTooLong);

    Message r;
    Tensor t;
    t.dims.assign(9, 1);
    t.data.assign(1, 0);
    r.append("t", t);
    expect(r, WireErrc::kUnsupportedRank);

    Message s;
    Tensor u;
    u.dims = {2, 2};
    u.data = {1, 2, 3};
    s.append("t", u);
    expect(s, WireErrc::kTensorShapeMismatch);

    Message bad_str;
    bad_str.append("s", std::string("\xff"));
    expect(bad_str, WireErrc::kInvalidUtf8);

    Message dup;
    dup.append("a", std::uint64_t{1});
    CHECK_THROWS_AS(dup.append("a", std::uint64_t{2}), WireError);
    dup.set("a", std::int64_t{-1});
    CHECK(dup.size() == 1);
    CHECK(std::get<std::int64_t>(*dup.find("a")) == -1);
  }

  TEST_CASE("stream header validation") {
    Message m;
    CHECK_THROWS_AS(validate_stream_header(m), WireError);
    m.append("btid", std::uint64_t{1});
    CHECK_THROWS_AS(validate_stream_header(m), WireError);
    m.append("frame", std::int64_t{1});
    CHECK_THROWS_AS(validate_stream_header(m), WireError);
    m.set("frame", std::uint64_t{1});
    CHECK_NOTHROW(validate_stream_header(m));
  }

  TEST_CASE("doubles compare by bit pattern") {
    const double nan1 = std::bit_cast<double>(0x7ff8000000000001ull);
    const double nan2 = std::bit_cast<double>(0x7ff8000000000002ull);
    CHECK(same_value(Value{nan1}, Value{nan1}));
    CHECK_FALSE(same_value(Value{nan1}, Value{nan2}));
    CHECK_FALSE(same_value(Value{0.0}, Value{-0.0}));
    Message a, b;
    a.append("x", nan1);
    b.append("x", nan1);
    CHECK(a == b);
  }

  TEST_CASE("typed tensor helpers") {
    const std::vector<float> f{1.5f, -2.0f};
    const Tensor t = Tensor::f32({2}, f);
    CHECK(t.as_f32() == f);
    CHECK_THROWS_AS(t.as_i64(), std::logic_error);
    CHECK_THROWS(Tensor::f32({3}, f));
    const Tensor z = Tensor::i64({0, 4}, {});
    CHECK(z.element_count() == 0);
    CHECK(z.data.empty());
  }
}
