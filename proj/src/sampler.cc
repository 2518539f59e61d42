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

#include "pcomp/sampler.h"

#include "pcomp/base.h"
#include "pcomp/rng.h"

namespace pcomp {

Tensor SampleField(const Tensor& mu, const Tensor& s, double alpha,
                   uint64_t seed, uint64_t* index_cursor) {
  PCOMP_CHECK(mu.SameShape(s), ErrorKind::kInvalidShape,
              "mean and scale field shapes differ");
  const uint64_t base = *index_cursor;
  *index_cursor += static_cast<uint64_t>(mu.Size());
  Tensor out = mu;
  if (alpha == 0.0) return out;
  for (int64_t i = 0; i < mu.Size(); ++i) {
    out.v[i] = mu.v[i] + alpha * s.v[i] * StandardNormal(seed, base + i);
  }
  return out;
}

uint64_t DrawSeed(uint64_t base_seed, uint64_t sample_index) {
  return HashKey(base_seed + 0x9E3779B97F4A7C15ull * (sample_index + 1));
}

}  // namespace pcomp
