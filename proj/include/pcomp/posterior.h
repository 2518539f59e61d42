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

#ifndef PCOMP_POSTERIOR_H_
#define PCOMP_POSTERIOR_H_

#include <optional>
#include <vector>

#include "pcomp/lifting.h"
#include "pcomp/nn.h"

namespace pcomp {

// Per-subband Gaussian field over the true coefficients given the decoded
// ones. Each subband has its own small conv net taking the decoded band (and,
// for detail bands, the co-located reconstructed coarser lowpass plane) and
// emitting a mean offset in (-0.5, 0.5) around the decoded value plus a
// positive scale. Zero-initialized last layers make the initial posterior
// mean equal the decoded coefficient exactly.
struct BandPosterior {
  Var mu;
  Var s;
};

struct PosteriorModel {
  int levels = 0;
  std::vector<ConvNet3> nets;  // BandOrder(levels) slots

  static PosteriorModel Create(ParamSet& params, int levels);
  static PosteriorModel Attach(const ParamSet& params, int levels);
  void Init(InitRng& rng) const;

  // `ref` must be present exactly for detail subbands, with the band's shape.
  BandPosterior Apply(Tape& t, Var band, std::optional<Var> ref,
                      const BandId& id) const;
  void ApplyEager(const Tensor& band, const Tensor* ref, const BandId& id,
                  Tensor* mu, Tensor* s) const;
};

}  // namespace pcomp

#endif  // PCOMP_POSTERIOR_H_
