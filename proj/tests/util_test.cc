// Copyright 2026 The pcomp Authors. All Rights Reserved.
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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "pcomp/base.h"
#include "pcomp/util.h"
#include "test_util.h"

namespace pcomp {
namespace {

TEST_CASE("byte writer round trips every field width") {
  ByteWriter w;
  w.U8(0xAB);
  w.U16(0x1234);
  w.U32(0xDEADBEEF);
  w.U64(0x0123456789ABCDEFull);
  w.F64(-1234.5678);
  w.Bytes("xyz", 3);

  ByteReader r(w.data().data(), w.data().size());
  CHECK(r.U8() == 0xAB);
  CHECK(r.U16() == 0x1234);
  CHECK(r.U32() == 0xDEADBEEF);
  CHECK(r.U64() == 0x0123456789ABCDEFull);
  CHECK(r.F64() == -1234.5678);
  uint8_t buf[3];
  r.Bytes(buf, 3);
  CHECK(buf[0] == 'x');
  CHECK(buf[2] == 'z');
  CHECK(r.Remaining() == 0);
}

TEST_CASE("byte reader fails on truncated input") {
  ByteWriter w;
  w.U32(7);
  ByteReader r(w.data().data(), 2);
  CHECK_THROWS_AS(r.U32(), Error);
}

TEST_CASE("fields are little endian on the wire") {
  ByteWriter w;
  w.U32(0x01020304);
  CHECK(w.data()[0] == 0x04);
  CHECK(w.data()[3] == 0x01);
}

TEST_CASE("crc32 matches the standard check value") {
  const char* s = "123456789";
  CHECK(Crc32(reinterpret_cast<const uint8_t*>(s), 9) == 0xCBF43926u);
}

TEST_CASE("crc32 of empty input is zero and chaining composes") {
  CHECK(Crc32(nullptr, 0) == 0u);
  const char* s = "123456789";
  const uint8_t* p = reinterpret_cast<const uint8_t*>(s);
  const uint32_t part = Crc32(p, 4);
  CHECK(Crc32(p + 4, 5, part) == Crc32(p, 9));
}

TEST_CASE("digest128 is deterministic and input sensitive") {
  std::vector<uint8_t> a{1, 2, 3, 4};
  std::vector<uint8_t> b{1, 2, 3, 5};
  const auto da = Digest128(a.data(), a.size());
  const auto db = Digest128(b.data(), b.size());
  CHECK(da == Digest128(a.data(), a.size()));
  CHECK(da != db);
}

TEST_CASE("hex string formats lowercase big endian bytes") {
  std::array<uint8_t, 16> d{};
  d[0] = 0x0F;
  d[15] = 0xA0;
  const std::string h = HexString(d.data(), d.size());
  CHECK(h.size() == 32);
  CHECK(h.substr(0, 2) == "0f");
  CHECK(h.substr(30, 2) == "a0");
}

TEST_CASE("file round trip and missing file error") {
  test::TempDir tmp("util");
  const std::string path = tmp.Sub("blob.bin");
  std::vector<uint8_t> payload{0, 255, 13, 10, 26, 7};
  WriteFile(path, payload.data(), payload.size());
  CHECK(ReadFile(path) == payload);
  CHECK_THROWS_AS(ReadFile(tmp.Sub("absent.bin")), Error);
}

TEST_CASE("error carries its kind") {
  try {
    Fail(ErrorKind::kModelMismatch, "nope");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kModelMismatch);
    CHECK(std::string(e.what()) == "nope");
  }
}

}  // namespace
}  // namespace pcomp
