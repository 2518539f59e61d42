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

#ifndef PCOMP_RANGE_CODER_H_
#define PCOMP_RANGE_CODER_H_

#include <cstdint>
#include <vector>

namespace pcomp {

// Integer probability resolution shared by the coder and the CDF quantizer.
inline constexpr int kProbBits = 16;
inline constexpr uint32_t kProbTotal = 1u << kProbBits;

// Cumulative frequency table with total kProbTotal and every symbol frequency
// at least 1. cum has NumSymbols()+1 entries, cum[0] == 0.
struct CodedCdf {
  std::vector<uint32_t> cum;

  int NumSymbols() const { return static_cast<int>(cum.size()) - 1; }
  uint32_t Low(int s) const { return cum[s]; }
  uint32_t Freq(int s) const { return cum[s + 1] - cum[s]; }

  // Quantizes real-valued weights (any positive scale) to integer
  // frequencies by largest remainder, deterministically.
  static CodedCdf FromProbs(const std::vector<double>& probs);
  // Largest s with cum[s] <= target; target must be < kProbTotal.
  int Find(uint32_t target) const;
};

// 256-way uniform table used to splice raw bytes into the coded stream.
const CodedCdf& UniformByteCdf();

// Carry-aware range coder with a 64-bit range and 16-bit renormalization
// digits. The final flush rounds the interval base up to a multiple of 2^48,
// so only a couple of digits of overhead follow the payload; the decoder
// zero-pads a short tail.
class RangeEncoder {
 public:
  void Encode(const CodedCdf& cdf, int sym);
  void EncodeRaw16(uint16_t v);
  // Flushes the final interval; no Encode calls may follow.
  std::vector<uint8_t> Finish();

 private:
  void ShiftLow();
  void Emit16(uint16_t d);

  unsigned __int128 low_ = 0;
  uint64_t range_ = ~0ull;
  uint16_t cache_ = 0;
  uint64_t pending_ = 0;
  bool started_ = false;
  bool finished_ = false;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  RangeDecoder(const uint8_t* data, size_t size);

  int Decode(const CodedCdf& cdf);
  uint16_t DecodeRaw16();
  size_t Consumed() const { return pos_; }

 private:
  uint16_t Next16();

  const uint8_t* data_ = nullptr;
  size_t size_ = 0;
  size_t pos_ = 0;
  size_t pad_bytes_ = 0;
  uint64_t code_ = 0;
  uint64_t range_ = ~0ull;
};

}  // namespace pcomp

#endif  // PCOMP_RANGE_CODER_H_
