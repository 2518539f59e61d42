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

#ifndef PCOMP_LIFTING_H_
#define PCOMP_LIFTING_H_

#include <optional>
#include <string>
#include <vector>

#include "pcomp/nn.h"
#include "pcomp/tape.h"

namespace pcomp {

// CDF 9/7 lifting factorization constants (analysis direction), with the
// scaling placed so the lowpass branch has DC gain 1: L /= kCdf97Zeta,
// H *= kCdf97Zeta.
inline constexpr double kCdf97Alpha = -1.586134342059924;
inline constexpr double kCdf97Beta = -0.052980118572961;
inline constexpr double kCdf97Gamma = 0.882911075530934;
inline constexpr double kCdf97Delta = 0.443506852043971;
inline constexpr double kCdf97Zeta = 1.230174104914001;

enum class Orientation { kLL, kHL, kLH, kHH };

struct BandId {
  int level = 0;  // 1 = finest
  Orientation orientation = Orientation::kLL;
};

const char* OrientationName(Orientation o);

// Coding / storage order of the 3K+1 subbands: coarsest first, and within a
// level HL before LH before HH. The single LL band sits at the top level.
std::vector<BandId> BandOrder(int levels);

// Subband dimensions for a rows x cols input at the given band.
void BandShape(int rows, int cols, const BandId& id, int* h, int* w);

// Position of a band in BandOrder(levels).
int BandSlot(int levels, const BandId& id);

// One learned 1-D lifting stage: the four classical CDF 9/7 steps, the zeta
// scaling pair, then two trainable predict/update residual pairs. The same
// stage is shared by every level and by both the row and column passes.
struct LiftingStage {
  ConvNet3 tl1, th1, tl2, th2;
  bool neural = true;  // false: plain CDF 9/7

  static LiftingStage Create(ParamSet& params, const std::string& prefix);
  static LiftingStage Attach(const ParamSet& params, const std::string& prefix);
  static LiftingStage Classic();  // fixed CDF 9/7, no parameters
  void Init(InitRng& rng) const;
  void SetTrainable(bool trainable) const;
};

// Forward split of a {h, w} plane along rows into lowpass and highpass halves
// {h/2, w}. Throws kInvalidShape for odd h.
void LiftForward1d(Tape& t, const LiftingStage& stage, Var x, Var* lo, Var* hi);
// Exact inverse: reassembles the {h, w} plane from the two halves.
Var LiftInverse1d(Tape& t, const LiftingStage& stage, Var lo, Var hi);

struct PyramidVars {
  int levels = 0;
  int rows = 0, cols = 0;   // input plane size
  std::vector<Var> bands;   // BandOrder(levels)
};

// Tensor-valued pyramid (inference paths).
struct Pyramid {
  int levels = 0;
  int rows = 0, cols = 0;
  std::vector<Tensor> bands;

  int BandIndex(const BandId& id) const;
};

// Full 2-D analysis: K levels of row/column splits. rows and cols must be
// divisible by 2^levels.
PyramidVars ForwardTransform(Tape& t, const LiftingStage& stage, Var image,
                             int levels);
Var InverseTransform(Tape& t, const LiftingStage& stage, const PyramidVars& p);
// Merges one level: reconstructs LL_{k-1} (or the image) from the level-k
// subbands.
Var InverseLevel(Tape& t, const LiftingStage& stage, Var ll, Var hl, Var lh,
                 Var hh);

// Eager wrappers that run on a scratch tape.
Pyramid ForwardTransformEager(const LiftingStage& stage, const Tensor& image,
                              int levels);
Tensor InverseTransformEager(const LiftingStage& stage, const Pyramid& p);
Tensor InverseLevelEager(const LiftingStage& stage, const Tensor& ll,
                         const Tensor& hl, const Tensor& lh, const Tensor& hh);

// Classical CDF 9/7 analysis/synthesis (the stage with no neural steps).
Pyramid Cdf97Forward(const Tensor& image, int levels);
Tensor Cdf97Inverse(const Pyramid& p);

}  // namespace pcomp

#endif  // PCOMP_LIFTING_H_
