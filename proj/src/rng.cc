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

#include "pcomp/rng.h"

#include <cmath>

namespace pcomp {

uint64_t HashKey(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t StreamKey(uint64_t seed, uint64_t index) {
  return HashKey(HashKey(seed) ^ (index * 0x9e3779b97f4a7c15ULL) ^ index);
}

double UniformFromKey(uint64_t key) {
  return static_cast<double>(key >> 11) * 0x1.0p-53;
}

double CenteredUniform(uint64_t seed, uint64_t index) {
  return UniformFromKey(StreamKey(seed, index)) - 0.5;
}

double StandardNormal(uint64_t seed, uint64_t index) {
  const uint64_t k = StreamKey(seed, index);
  // u1 in (0, 1] so the log is finite; u2 in [0, 1).
  const double u1 = (static_cast<double>(k >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = UniformFromKey(HashKey(k ^ 0xda3e39cb94b95bdbULL));
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * M_PI * u2);
}

}  // namespace pcomp
