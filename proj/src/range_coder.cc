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

#include "pcomp/range_coder.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcomp/base.h"

namespace pcomp {

namespace {

// Renormalize whenever fewer than 48 bits of range remain, so every Encode
// sees range >> 16 of at least 2^32 and frequency-1 symbols stay exact.
constexpr uint64_t kRenormBound = 1ull << 48;
constexpr size_t kMaxZeroPad = 8;

}  // namespace

CodedCdf CodedCdf::FromProbs(const std::vector<double>& probs) {
  const int n = static_cast<int>(probs.size());
  PCOMP_CHECK(n >= 1 && static_cast<uint32_t>(n) <= kProbTotal,
              ErrorKind::kContract, "bad symbol count for CDF");
  double sum = 0.0;
  for (double p : probs) {
    PCOMP_CHECK(std::isfinite(p) && p >= 0.0, ErrorKind::kContract,
                "CDF weights must be finite and non-negative");
    sum += p;
  }
  PCOMP_CHECK(sum > 0.0, ErrorKind::kContract, "CDF weights sum to zero");

  std::vector<uint32_t> freq(n);
  std::vector<double> rem(n);
  uint64_t assigned = 0;
  for (int i = 0; i < n; ++i) {
    const double ideal = probs[i] / sum * kProbTotal;
    freq[i] = static_cast<uint32_t>(std::floor(ideal));
    rem[i] = ideal - std::floor(ideal);
    assigned += freq[i];
  }
  // Hand out the rounding slack to the largest remainders (index breaks
  // ties), then promote any zero-frequency symbols by stealing from the
  // currently largest one.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&rem](int a, int b) { return rem[a] > rem[b]; });
  int64_t slack = static_cast<int64_t>(kProbTotal) -
                  static_cast<int64_t>(assigned);
  for (int i = 0; slack > 0; i = (i + 1) % n, --slack) ++freq[order[i]];
  for (int i = 0; i < n; ++i) {
    if (freq[i] != 0) continue;
    int donor = 0;
    for (int j = 1; j < n; ++j) {
      if (freq[j] > freq[donor]) donor = j;
    }
    PCOMP_CHECK(freq[donor] >= 2, ErrorKind::kContract,
                "not enough probability mass to cover alphabet");
    --freq[donor];
    freq[i] = 1;
  }

  CodedCdf cdf;
  cdf.cum.resize(n + 1);
  cdf.cum[0] = 0;
  for (int i = 0; i < n; ++i) cdf.cum[i + 1] = cdf.cum[i] + freq[i];
  PCOMP_CHECK(cdf.cum[n] == kProbTotal, ErrorKind::kContract,
              "CDF total mismatch");
  return cdf;
}

int CodedCdf::Find(uint32_t target) const {
  auto it = std::upper_bound(cum.begin(), cum.end(), target);
  return static_cast<int>(it - cum.begin()) - 1;
}

const CodedCdf& UniformByteCdf() {
  static const CodedCdf cdf = [] {
    CodedCdf c;
    c.cum.resize(257);
    for (int i = 0; i <= 256; ++i) c.cum[i] = static_cast<uint32_t>(i) << 8;
    return c;
  }();
  return cdf;
}

void RangeEncoder::Emit16(uint16_t d) {
  out_.push_back(static_cast<uint8_t>(d >> 8));
  out_.push_back(static_cast<uint8_t>(d & 0xFF));
}

void RangeEncoder::ShiftLow() {
  const uint64_t lo64 = static_cast<uint64_t>(low_);
  const uint32_t carry = static_cast<uint32_t>(low_ >> 64);
  if (carry != 0 || lo64 < 0xFFFF000000000000ull) {
    if (started_) Emit16(static_cast<uint16_t>(cache_ + carry));
    for (; pending_ > 0; --pending_) {
      Emit16(static_cast<uint16_t>(0xFFFFu + carry));
    }
    cache_ = static_cast<uint16_t>(lo64 >> 48);
    started_ = true;
  } else {
    ++pending_;
  }
  low_ = static_cast<unsigned __int128>(lo64 << 16);
}

void RangeEncoder::Encode(const CodedCdf& cdf, int sym) {
  PCOMP_CHECK(!finished_, ErrorKind::kSequencing,
              "Encode after Finish on range encoder");
  PCOMP_CHECK(sym >= 0 && sym < cdf.NumSymbols(), ErrorKind::kContract,
              "symbol outside CDF");
  const uint64_t r = range_ >> kProbBits;
  const uint64_t lo = cdf.Low(sym);
  low_ += static_cast<unsigned __int128>(r * lo);
  if (cdf.cum[sym + 1] == kProbTotal) {
    range_ -= r * lo;  // give the top symbol the rounding slack
  } else {
    range_ = r * cdf.Freq(sym);
  }
  while (range_ < kRenormBound) {
    ShiftLow();
    range_ <<= 16;
  }
}

void RangeEncoder::EncodeRaw16(uint16_t v) {
  const CodedCdf& u = UniformByteCdf();
  Encode(u, v >> 8);
  Encode(u, v & 0xFF);
}

std::vector<uint8_t> RangeEncoder::Finish() {
  PCOMP_CHECK(!finished_, ErrorKind::kSequencing,
              "Finish called twice on range encoder");
  finished_ = true;
  // Any value in [low, low + range) decodes correctly; pick the smallest
  // multiple of 2^48 at or above low so the tail is all zero and can be
  // left implicit.
  const unsigned __int128 step = static_cast<unsigned __int128>(1) << 48;
  low_ = (low_ + step - 1) & ~(step - 1);
  ShiftLow();
  ShiftLow();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(const uint8_t* data, size_t size)
    : data_(data), size_(size) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 16) | Next16();
}

uint16_t RangeDecoder::Next16() {
  if (pos_ + 2 <= size_) {
    const uint16_t d = static_cast<uint16_t>(
        (static_cast<uint32_t>(data_[pos_]) << 8) | data_[pos_ + 1]);
    pos_ += 2;
    return d;
  }
  pad_bytes_ += 2;
  PCOMP_CHECK(pad_bytes_ <= kMaxZeroPad, ErrorKind::kData,
              "coded stream truncated");
  return 0;
}

int RangeDecoder::Decode(const CodedCdf& cdf) {
  const uint64_t r = range_ >> kProbBits;
  const uint64_t target =
      std::min<uint64_t>(code_ / r, kProbTotal - 1);
  const int sym = cdf.Find(static_cast<uint32_t>(target));
  const uint64_t lo = cdf.Low(sym);
  code_ -= r * lo;
  if (cdf.cum[sym + 1] == kProbTotal) {
    range_ -= r * lo;
  } else {
    range_ = r * cdf.Freq(sym);
  }
  while (range_ < kRenormBound) {
    code_ = (code_ << 16) | Next16();
    range_ <<= 16;
  }
  return sym;
}

uint16_t RangeDecoder::DecodeRaw16() {
  const CodedCdf& u = UniformByteCdf();
  const uint16_t hi = static_cast<uint16_t>(Decode(u));
  const uint16_t lo = static_cast<uint16_t>(Decode(u));
  return static_cast<uint16_t>((hi << 8) | lo);
}

}  // namespace pcomp
