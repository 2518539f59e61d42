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

#ifndef PCOMP_QUANTIZE_H_
#define PCOMP_QUANTIZE_H_

#include <cstdint>

#include "pcomp/lifting.h"
#include "pcomp/tensor.h"

namespace pcomp {

// Unit quantization step; symbols live in the signed 16-bit alphabet.
inline constexpr int kSymbolMin = -32768;
inline constexpr int kSymbolMax = 32767;

// Round-half-away-from-zero (0.5 -> 1, -0.5 -> -1).
inline double RoundCoeff(double x) { return std::round(x); }

// Hard quantization of a coefficient plane. Values outside the alphabet raise
// kRangeOverflow. The result holds integral doubles (step 1.0 makes
// dequantization the identity).
Tensor QuantizeHard(const Tensor& y);
Pyramid QuantizeHard(const Pyramid& y);

// Training surrogate: y + u with u ~ U(-0.5, 0.5) drawn from the
// counter-based stream (seed, index_base + i). Gradients pass straight
// through because the noise enters as a constant.
Tensor QuantizeNoise(const std::vector<int>& shape, uint64_t seed,
                     uint64_t index_base);

}  // namespace pcomp

#endif  // PCOMP_QUANTIZE_H_
