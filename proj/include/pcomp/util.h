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

#ifndef PCOMP_UTIL_H_
#define PCOMP_UTIL_H_

#include <array>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "pcomp/base.h"

namespace pcomp {

// Little-endian byte stream writer/reader used by the model and container
// formats.
class ByteWriter {
 public:
  void U8(uint8_t v) { buf_.push_back(v); }
  void U16(uint16_t v);
  void U32(uint32_t v);
  void U64(uint64_t v);
  void F64(double v);
  void Bytes(const void* p, size_t n);
  void Str(const std::string& s);  // raw bytes, no length prefix

  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> Take() { return std::move(buf_); }
  size_t size() const { return buf_.size(); }

 private:
  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const uint8_t* p, size_t n) : p_(p), n_(n) {}
  explicit ByteReader(const std::vector<uint8_t>& v)
      : ByteReader(v.data(), v.size()) {}

  uint8_t U8();
  uint16_t U16();
  uint32_t U32();
  uint64_t U64();
  double F64();
  void Bytes(void* out, size_t n);
  std::string Str(size_t n);
  size_t Remaining() const { return n_ - pos_; }
  size_t Position() const { return pos_; }

 private:
  void Need(size_t n) const {
    PCOMP_CHECK(pos_ + n <= n_, ErrorKind::kData, "truncated stream");
  }
  const uint8_t* p_;
  size_t n_;
  size_t pos_ = 0;
};

// CRC-32 (IEEE 802.3 polynomial, reflected).
uint32_t Crc32(const void* data, size_t n, uint32_t seed = 0);

// 128-bit FNV-1a style digest used for model fingerprints.
std::array<uint8_t, 16> Digest128(const void* data, size_t n);

std::vector<uint8_t> ReadFile(const std::string& path);
void WriteFile(const std::string& path, const void* data, size_t n);

std::string HexString(const uint8_t* data, size_t n);

}  // namespace pcomp

#endif  // PCOMP_UTIL_H_
