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

#ifndef PCOMP_RNG_H_
#define PCOMP_RNG_H_

#include <cstdint>

// Counter-based random number generation. Every draw is a pure function of
// (seed, index), so the same coefficient gets the same noise regardless of
// evaluation order or thread count.
namespace pcomp {

// SplitMix64 finalizer.
uint64_t HashKey(uint64_t x);
// Combines a seed with an index into a decorrelated stream key.
uint64_t StreamKey(uint64_t seed, uint64_t index);

// Uniform in [0, 1) with 53-bit resolution.
double UniformFromKey(uint64_t key);
// Uniform in [-0.5, 0.5).
double CenteredUniform(uint64_t seed, uint64_t index);
// Standard normal draw for (seed, index) via Box-Muller.
double StandardNormal(uint64_t seed, uint64_t index);

}  // namespace pcomp

#endif  // PCOMP_RNG_H_
