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

#include "pcomp/quantize.h"

#include <cmath>

#include "pcomp/rng.h"

namespace pcomp {

Tensor QuantizeHard(const Tensor& y) {
  Tensor q = Tensor::Zeros(y.shape);
  for (int64_t i = 0; i < y.Size(); ++i) {
    const double x = y.v[i];
    PCOMP_CHECK(std::isfinite(x), ErrorKind::kRangeOverflow,
                "non-finite coefficient");
    const double r = RoundCoeff(x);
    PCOMP_CHECK(r >= kSymbolMin && r <= kSymbolMax, ErrorKind::kRangeOverflow,
                "coefficient " + std::to_string(x) + " outside the alphabet");
    q.v[i] = r;
  }
  return q;
}

Pyramid QuantizeHard(const Pyramid& y) {
  Pyramid q;
  q.levels = y.levels;
  q.rows = y.rows;
  q.cols = y.cols;
  q.bands.reserve(y.bands.size());
  for (const Tensor& b : y.bands) q.bands.push_back(QuantizeHard(b));
  return q;
}

Tensor QuantizeNoise(const std::vector<int>& shape, uint64_t seed,
                     uint64_t index_base) {
  Tensor u = Tensor::Zeros(shape);
  for (int64_t i = 0; i < u.Size(); ++i) {
    u.v[i] = CenteredUniform(seed, index_base + static_cast<uint64_t>(i));
  }
  return u;
}

}  // namespace pcomp
