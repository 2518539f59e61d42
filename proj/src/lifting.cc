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

#include "pcomp/lifting.h"

namespace pcomp {

const char* OrientationName(Orientation o) {
  switch (o) {
    case Orientation::kLL: return "ll";
    case Orientation::kHL: return "hl";
    case Orientation::kLH: return "lh";
    case Orientation::kHH: return "hh";
  }
  return "?";
}

std::vector<BandId> BandOrder(int levels) {
  PCOMP_CHECK(levels >= 1, ErrorKind::kInvalidShape, "levels must be >= 1");
  std::vector<BandId> order;
  order.push_back({levels, Orientation::kLL});
  for (int k = levels; k >= 1; --k) {
    order.push_back({k, Orientation::kHL});
    order.push_back({k, Orientation::kLH});
    order.push_back({k, Orientation::kHH});
  }
  return order;
}

void BandShape(int rows, int cols, const BandId& id, int* h, int* w) {
  *h = rows >> id.level;
  *w = cols >> id.level;
}

int BandSlot(int levels, const BandId& id) {
  if (id.orientation == Orientation::kLL) return 0;
  return 1 + 3 * (levels - id.level) + (static_cast<int>(id.orientation) - 1);
}

int Pyramid::BandIndex(const BandId& id) const { return BandSlot(levels, id); }

LiftingStage LiftingStage::Create(ParamSet& params, const std::string& prefix) {
  LiftingStage s;
  s.tl1 = ConvNet3::Create(params, prefix + ".p1.tl", 1, 16, 1, 3);
  s.th1 = ConvNet3::Create(params, prefix + ".p1.th", 1, 16, 1, 3);
  s.tl2 = ConvNet3::Create(params, prefix + ".p2.tl", 1, 16, 1, 3);
  s.th2 = ConvNet3::Create(params, prefix + ".p2.th", 1, 16, 1, 3);
  return s;
}

LiftingStage LiftingStage::Attach(const ParamSet& params,
                                  const std::string& prefix) {
  LiftingStage s;
  s.tl1 = ConvNet3::Attach(params, prefix + ".p1.tl", 1, 16, 1, 3);
  s.th1 = ConvNet3::Attach(params, prefix + ".p1.th", 1, 16, 1, 3);
  s.tl2 = ConvNet3::Attach(params, prefix + ".p2.tl", 1, 16, 1, 3);
  s.th2 = ConvNet3::Attach(params, prefix + ".p2.th", 1, 16, 1, 3);
  return s;
}

LiftingStage LiftingStage::Classic() {
  LiftingStage s;
  s.neural = false;
  return s;
}

void LiftingStage::Init(InitRng& rng) const {
  tl1.Init(rng);
  th1.Init(rng);
  tl2.Init(rng);
  th2.Init(rng);
}

void LiftingStage::SetTrainable(bool trainable) const {
  tl1.SetTrainable(trainable);
  th1.SetTrainable(trainable);
  tl2.SetTrainable(trainable);
  th2.SetTrainable(trainable);
}

void LiftForward1d(Tape& t, const LiftingStage& stage, Var x, Var* lo,
                   Var* hi) {
  Var l = t.EvenRows(x);
  Var h = t.OddRows(x);
  // Classical ladder. Boundaries mirror-clamp through the pair sums.
  h = t.Axpy(h, kCdf97Alpha, t.PairSumNext(l));
  l = t.Axpy(l, kCdf97Beta, t.PairSumPrev(h));
  h = t.Axpy(h, kCdf97Gamma, t.PairSumNext(l));
  l = t.Axpy(l, kCdf97Delta, t.PairSumPrev(h));
  l = t.Scale(l, 1.0 / kCdf97Zeta);
  h = t.Scale(h, kCdf97Zeta);
  if (stage.neural) {
    // Residual predict/update pairs; each inverse subtracts the identical
    // operator output, so invertibility holds for any weights.
    h = t.Add(h, stage.tl1.Apply(t, l));
    l = t.Add(l, stage.th1.Apply(t, h));
    h = t.Add(h, stage.tl2.Apply(t, l));
    l = t.Add(l, stage.th2.Apply(t, h));
  }
  *lo = l;
  *hi = h;
}

Var LiftInverse1d(Tape& t, const LiftingStage& stage, Var lo, Var hi) {
  Var l = lo;
  Var h = hi;
  if (stage.neural) {
    l = t.Sub(l, stage.th2.Apply(t, h));
    h = t.Sub(h, stage.tl2.Apply(t, l));
    l = t.Sub(l, stage.th1.Apply(t, h));
    h = t.Sub(h, stage.tl1.Apply(t, l));
  }
  l = t.Scale(l, kCdf97Zeta);
  h = t.Scale(h, 1.0 / kCdf97Zeta);
  l = t.Axpy(l, -kCdf97Delta, t.PairSumPrev(h));
  h = t.Axpy(h, -kCdf97Gamma, t.PairSumNext(l));
  l = t.Axpy(l, -kCdf97Beta, t.PairSumPrev(h));
  h = t.Axpy(h, -kCdf97Alpha, t.PairSumNext(l));
  return t.InterleaveRows(l, h);
}

namespace {

// Column pass via transposition so the shared stage always works on rows.
void SplitColumns(Tape& t, const LiftingStage& stage, Var x, Var* lo, Var* hi) {
  Var lt, ht;
  LiftForward1d(t, stage, t.Transpose(x), &lt, &ht);
  *lo = t.Transpose(lt);
  *hi = t.Transpose(ht);
}

Var MergeColumns(Tape& t, const LiftingStage& stage, Var lo, Var hi) {
  return t.Transpose(LiftInverse1d(t, stage, t.Transpose(lo), t.Transpose(hi)));
}

}  // namespace

PyramidVars ForwardTransform(Tape& t, const LiftingStage& stage, Var image,
                             int levels) {
  const Tensor& ti = t.Val(image);
  PCOMP_CHECK(ti.Rank() == 2, ErrorKind::kInvalidShape,
              "forward transform expects a 2-d plane");
  const int rows = ti.shape[0], cols = ti.shape[1];
  PCOMP_CHECK(levels >= 1 && rows % (1 << levels) == 0 &&
                  cols % (1 << levels) == 0,
              ErrorKind::kInvalidShape,
              "plane " + std::to_string(rows) + "x" + std::to_string(cols) +
                  " not divisible by 2^" + std::to_string(levels));

  PyramidVars p;
  p.levels = levels;
  p.rows = rows;
  p.cols = cols;
  std::vector<Var> details;  // HL, LH, HH per level, finest first
  Var cur = image;
  for (int k = 1; k <= levels; ++k) {
    Var low, high;
    LiftForward1d(t, stage, cur, &low, &high);
    Var ll, hl, lh, hh;
    SplitColumns(t, stage, low, &ll, &hl);
    SplitColumns(t, stage, high, &lh, &hh);
    details.push_back(hl);
    details.push_back(lh);
    details.push_back(hh);
    cur = ll;
  }
  p.bands.push_back(cur);
  for (int k = levels; k >= 1; --k) {
    for (int j = 0; j < 3; ++j) p.bands.push_back(details[3 * (k - 1) + j]);
  }
  return p;
}

Var InverseLevel(Tape& t, const LiftingStage& stage, Var ll, Var hl, Var lh,
                 Var hh) {
  Var low = MergeColumns(t, stage, ll, hl);
  Var high = MergeColumns(t, stage, lh, hh);
  return LiftInverse1d(t, stage, low, high);
}

Var InverseTransform(Tape& t, const LiftingStage& stage, const PyramidVars& p) {
  PCOMP_CHECK(p.bands.size() == static_cast<size_t>(3 * p.levels + 1),
              ErrorKind::kInvalidShape, "pyramid band count mismatch");
  Var cur = p.bands[0];
  for (int k = p.levels; k >= 1; --k) {
    const int base = 1 + 3 * (p.levels - k);
    cur = InverseLevel(t, stage, cur, p.bands[base], p.bands[base + 1],
                       p.bands[base + 2]);
  }
  return cur;
}

Pyramid ForwardTransformEager(const LiftingStage& stage, const Tensor& image,
                              int levels) {
  Tape t;
  PyramidVars pv = ForwardTransform(t, stage, t.Input(image), levels);
  Pyramid p;
  p.levels = pv.levels;
  p.rows = pv.rows;
  p.cols = pv.cols;
  for (Var b : pv.bands) p.bands.push_back(t.Val(b));
  return p;
}

Tensor InverseTransformEager(const LiftingStage& stage, const Pyramid& p) {
  Tape t;
  PyramidVars pv;
  pv.levels = p.levels;
  pv.rows = p.rows;
  pv.cols = p.cols;
  for (const Tensor& b : p.bands) pv.bands.push_back(t.Input(b));
  return t.Val(InverseTransform(t, stage, pv));
}

Tensor InverseLevelEager(const LiftingStage& stage, const Tensor& ll,
                         const Tensor& hl, const Tensor& lh, const Tensor& hh) {
  Tape t;
  return t.Val(InverseLevel(t, stage, t.Input(ll), t.Input(hl), t.Input(lh),
                            t.Input(hh)));
}

Pyramid Cdf97Forward(const Tensor& image, int levels) {
  return ForwardTransformEager(LiftingStage::Classic(), image, levels);
}

Tensor Cdf97Inverse(const Pyramid& p) {
  return InverseTransformEager(LiftingStage::Classic(), p);
}

}  // namespace pcomp
