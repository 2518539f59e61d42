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

#ifndef PCOMP_SAMPLER_H_
#define PCOMP_SAMPLER_H_

#include <cstdint>

#include "pcomp/tensor.h"

namespace pcomp {

// Draws y[i] = mu[i] + alpha * s[i] * eps[i] with eps from the counter-based
// standard normal stream for `seed` at positions index_base + i. alpha == 0
// returns mu unchanged without consuming stream positions conceptually (the
// positions stay reserved, so alpha only scales a fixed noise field).
// *index_cursor advances by the band size either way, keeping every subband,
// channel, and draw on disjoint stream positions.
Tensor SampleField(const Tensor& mu, const Tensor& s, double alpha,
                   uint64_t seed, uint64_t* index_cursor);

// Stream seed for one reconstruction draw. Consecutive sample indices give
// unrelated streams; the hash keying makes that safe.
uint64_t DrawSeed(uint64_t base_seed, uint64_t sample_index);

}  // namespace pcomp

#endif  // PCOMP_SAMPLER_H_
