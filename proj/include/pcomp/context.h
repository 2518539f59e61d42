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

#ifndef PCOMP_CONTEXT_H_
#define PCOMP_CONTEXT_H_

#include <memory>
#include <optional>
#include <vector>

#include "pcomp/gaussian.h"
#include "pcomp/lifting.h"
#include "pcomp/nn.h"

namespace pcomp {

// Conditional 3-component Gaussian mixture over quantized coefficients.
// Each coefficient's context is the already-decodable part of a window x
// window neighborhood in its own subband (strictly above, or same row left),
// the co-located window x window block of the reconstructed coarser lowpass
// plane (detail subbands only), and the level index. One MLP head per
// orientation maps the context to 9 raw mixture outputs.
struct ContextModel {
  int window = 5;
  MlpHead heads[4];  // indexed by Orientation

  static ContextModel Create(ParamSet& params, int window);
  static ContextModel Attach(const ParamSet& params, int window);
  void Init(InitRng& rng) const;
};

// Number of causal in-subband entries for an interior position:
// ceil(window^2 / 2) - 1.
int CausalCount(int window);
// Total feature count: causal + (has_ref ? window^2 : 0) + 1 level entry.
int ContextFeatureCount(int window, bool has_ref);

// Writes one coefficient's context features (zero-filled outside the
// subband). ref may be null for the lowpass band.
void BuildContextRow(const Tensor& band, const Tensor* ref, int r, int c,
                     int window, int level, double* out);

// Cached gather index tables for the batched training path. Entries are flat
// indices into an h x w plane, -1 for out-of-band positions.
std::shared_ptr<const std::vector<int32_t>> CausalPlan(int h, int w,
                                                       int window);
std::shared_ptr<const std::vector<int32_t>> ReferencePlan(int h, int w,
                                                          int window);

// Differentiable rate of a whole subband in nats: sum over coefficients of
// the mixture NLL, contexts gathered from the coding values themselves.
// `ref` must be present exactly for detail subbands.
Var BandRateNll(Tape& t, const ContextModel& m, Var band, std::optional<Var> ref,
                const BandId& id);

// Coder-side mixture for a single coefficient; bit-identical to what the
// batched path produces for the same inputs.
MixtureParams PredictMixture(const ContextModel& m, const Tensor& band,
                             const Tensor* ref, int r, int c, const BandId& id);

// Support window the coder uses for one coefficient. Derived from the mixture
// (±9 sigma around every component, widened by one), clamped to the alphabet
// and capped at kMaxCodingWindow symbols around the dominant mean. Values
// inside the alphabet but outside the window are escape-coded.
struct SymbolWindow {
  int lo = 0, hi = 0;  // inclusive
  int Size() const { return hi - lo + 1; }
  bool Contains(int v) const { return v >= lo && v <= hi; }
};
inline constexpr int kMaxCodingWindow = 4096;
SymbolWindow CodingWindow(const MixtureParams& p);

// Probabilities for the window symbols plus one trailing escape symbol.
// Window entries are floored coefficient probabilities; the escape gets the
// remaining mass, floored as well.
void BuildCodingDistribution(const MixtureParams& p, const SymbolWindow& w,
                             std::vector<double>* probs);

// Exact bit cost the estimator charges for symbol v under this model; matches
// the coding construction (escapes cost their escape probability plus 16 raw
// bits) up to integer CDF quantization.
double SymbolCostBits(int v, const MixtureParams& p, const SymbolWindow& w);

}  // namespace pcomp

#endif  // PCOMP_CONTEXT_H_
