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

#include "pcomp/context.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <utility>

#include "pcomp/base.h"
#include "pcomp/quantize.h"

namespace pcomp {

namespace {

constexpr int kHiddenUnits = 64;
constexpr int kRawOutputs = 9;

// Offsets visited before (r, c) in raster order, nearest rows last. The same
// enumeration drives both the gather tables and the per-coefficient rows, so
// feature layouts agree between training and coding.
std::vector<std::pair<int, int>> CausalOffsets(int window) {
  const int rad = window / 2;
  std::vector<std::pair<int, int>> offs;
  for (int dr = -rad; dr <= 0; ++dr) {
    for (int dc = -rad; dc <= rad; ++dc) {
      if (dr < 0 || dc < 0) offs.emplace_back(dr, dc);
    }
  }
  return offs;
}

std::vector<std::pair<int, int>> FullOffsets(int window) {
  const int rad = window / 2;
  std::vector<std::pair<int, int>> offs;
  for (int dr = -rad; dr <= rad; ++dr) {
    for (int dc = -rad; dc <= rad; ++dc) offs.emplace_back(dr, dc);
  }
  return offs;
}

using PlanKey = std::tuple<int, int, int, bool>;
using PlanPtr = std::shared_ptr<const std::vector<int32_t>>;

PlanPtr BuildPlan(int h, int w, int window, bool causal) {
  static std::mutex mu;
  static std::map<PlanKey, PlanPtr> cache;
  const PlanKey key{h, w, window, causal};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const auto offs = causal ? CausalOffsets(window) : FullOffsets(window);
  const int m = static_cast<int>(offs.size());
  auto table = std::make_shared<std::vector<int32_t>>(
      static_cast<size_t>(h) * w * m);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      int32_t* row = table->data() + (static_cast<size_t>(r) * w + c) * m;
      for (int e = 0; e < m; ++e) {
        const int rr = r + offs[e].first;
        const int cc = c + offs[e].second;
        row[e] = (rr >= 0 && rr < h && cc >= 0 && cc < w)
                     ? static_cast<int32_t>(rr * w + cc)
                     : -1;
      }
    }
  }
  PlanPtr frozen = table;
  std::lock_guard<std::mutex> lock(mu);
  auto [it, inserted] = cache.emplace(key, frozen);
  return it->second;
}

const char* HeadName(Orientation o) {
  switch (o) {
    case Orientation::kLL:
      return "ctx.ll";
    case Orientation::kHL:
      return "ctx.hl";
    case Orientation::kLH:
      return "ctx.lh";
    case Orientation::kHH:
      return "ctx.hh";
  }
  Fail(ErrorKind::kContract, "bad orientation");
}

}  // namespace

int CausalCount(int window) { return (window * window + 1) / 2 - 1; }

int ContextFeatureCount(int window, bool has_ref) {
  return CausalCount(window) + (has_ref ? window * window : 0) + 1;
}

ContextModel ContextModel::Create(ParamSet& params, int window) {
  PCOMP_CHECK(window >= 3 && window % 2 == 1, ErrorKind::kContract,
              "context window must be odd and >= 3");
  ContextModel m;
  m.window = window;
  for (int o = 0; o < 4; ++o) {
    const bool has_ref = o != static_cast<int>(Orientation::kLL);
    m.heads[o] =
        MlpHead::Create(params, HeadName(static_cast<Orientation>(o)),
                        ContextFeatureCount(window, has_ref), kHiddenUnits,
                        kRawOutputs);
  }
  return m;
}

ContextModel ContextModel::Attach(const ParamSet& params, int window) {
  PCOMP_CHECK(window >= 3 && window % 2 == 1, ErrorKind::kContract,
              "context window must be odd and >= 3");
  ContextModel m;
  m.window = window;
  for (int o = 0; o < 4; ++o) {
    const bool has_ref = o != static_cast<int>(Orientation::kLL);
    m.heads[o] =
        MlpHead::Attach(params, HeadName(static_cast<Orientation>(o)),
                        ContextFeatureCount(window, has_ref), kHiddenUnits,
                        kRawOutputs);
  }
  return m;
}

void ContextModel::Init(InitRng& rng) const {
  for (const auto& head : heads) head.Init(rng);
}

void BuildContextRow(const Tensor& band, const Tensor* ref, int r, int c,
                     int window, int level, double* out) {
  const int h = band.shape[0];
  const int w = band.shape[1];
  int k = 0;
  const int rad = window / 2;
  for (int dr = -rad; dr <= 0; ++dr) {
    for (int dc = -rad; dc <= rad; ++dc) {
      if (dr >= 0 && dc >= 0) continue;
      const int rr = r + dr;
      const int cc = c + dc;
      out[k++] = (rr >= 0 && rr < h && cc >= 0 && cc < w) ? band.At(rr, cc)
                                                          : 0.0;
    }
  }
  if (ref != nullptr) {
    for (int dr = -rad; dr <= rad; ++dr) {
      for (int dc = -rad; dc <= rad; ++dc) {
        const int rr = r + dr;
        const int cc = c + dc;
        out[k++] = (rr >= 0 && rr < h && cc >= 0 && cc < w) ? ref->At(rr, cc)
                                                            : 0.0;
      }
    }
  }
  out[k] = static_cast<double>(level);
}

std::shared_ptr<const std::vector<int32_t>> CausalPlan(int h, int w,
                                                       int window) {
  return BuildPlan(h, w, window, true);
}

std::shared_ptr<const std::vector<int32_t>> ReferencePlan(int h, int w,
                                                          int window) {
  return BuildPlan(h, w, window, false);
}

Var BandRateNll(Tape& t, const ContextModel& m, Var band,
                std::optional<Var> ref, const BandId& id) {
  PCOMP_CHECK(t.Val(band).Rank() == 2, ErrorKind::kInvalidShape,
              "subband must be rank-2");
  const int h = t.Val(band).shape[0];
  const int w = t.Val(band).shape[1];
  const int n = h * w;
  const bool is_ll = id.orientation == Orientation::kLL;
  PCOMP_CHECK(is_ll == !ref.has_value(), ErrorKind::kContract,
              "reference plane must accompany detail subbands only");
  if (ref.has_value()) {
    PCOMP_CHECK(t.Val(*ref).SameShape(t.Val(band)), ErrorKind::kInvalidShape,
                "reference plane shape mismatch");
  }
  Var feats = t.Gather(band, CausalPlan(h, w, m.window), n,
                       CausalCount(m.window));
  if (ref.has_value()) {
    feats = t.ConcatCols(feats, t.Gather(*ref, ReferencePlan(h, w, m.window),
                                         n, m.window * m.window));
  }
  feats = t.ConcatCols(
      feats, t.Input(Tensor::Full({n, 1}, static_cast<double>(id.level))));
  Var raw = m.heads[static_cast<int>(id.orientation)].Apply(t, feats);
  Var v = t.Reshape(band, {n});
  return t.MixtureNll(v, t.SliceCols(raw, 0, 3), t.SliceCols(raw, 3, 6),
                      t.SliceCols(raw, 6, 9));
}

MixtureParams PredictMixture(const ContextModel& m, const Tensor& band,
                             const Tensor* ref, int r, int c,
                             const BandId& id) {
  const bool is_ll = id.orientation == Orientation::kLL;
  PCOMP_CHECK(is_ll == (ref == nullptr), ErrorKind::kContract,
              "reference plane must accompany detail subbands only");
  double feats[64];
  const int fc = ContextFeatureCount(m.window, ref != nullptr);
  PCOMP_CHECK(fc <= 64, ErrorKind::kContract, "context window too large");
  BuildContextRow(band, ref, r, c, m.window, id.level, feats);
  double raw[kRawOutputs];
  m.heads[static_cast<int>(id.orientation)].ApplyEager(feats, 1, raw);
  return MixtureFromRaw(raw);
}

SymbolWindow CodingWindow(const MixtureParams& p) {
  double lo_f = p.mu[0] - 9.0 * p.s[0];
  double hi_f = p.mu[0] + 9.0 * p.s[0];
  for (int n = 1; n < 3; ++n) {
    lo_f = std::min(lo_f, p.mu[n] - 9.0 * p.s[n]);
    hi_f = std::max(hi_f, p.mu[n] + 9.0 * p.s[n]);
  }
  PCOMP_CHECK(std::isfinite(lo_f) && std::isfinite(hi_f), ErrorKind::kContract,
              "mixture parameters are not finite");
  const double alo = static_cast<double>(kSymbolMin);
  const double ahi = static_cast<double>(kSymbolMax);
  SymbolWindow win;
  win.lo = static_cast<int>(std::clamp(std::floor(lo_f) - 1.0, alo, ahi));
  win.hi = static_cast<int>(std::clamp(
      std::ceil(hi_f) + 1.0, static_cast<double>(win.lo), ahi));
  if (win.Size() > kMaxCodingWindow) {
    int best = 0;
    for (int n = 1; n < 3; ++n) {
      if (p.w[n] > p.w[best]) best = n;
    }
    const int center =
        static_cast<int>(std::clamp(std::round(p.mu[best]), alo, ahi));
    int lo = center - kMaxCodingWindow / 2;
    int hi = lo + kMaxCodingWindow - 1;
    if (lo < kSymbolMin) {
      lo = kSymbolMin;
      hi = lo + kMaxCodingWindow - 1;
    }
    if (hi > kSymbolMax) {
      hi = kSymbolMax;
      lo = hi - kMaxCodingWindow + 1;
    }
    win.lo = lo;
    win.hi = hi;
  }
  return win;
}

void BuildCodingDistribution(const MixtureParams& p, const SymbolWindow& w,
                             std::vector<double>* probs) {
  probs->resize(static_cast<size_t>(w.Size()) + 1);
  double total = 0.0;
  for (int i = 0; i < w.Size(); ++i) {
    const double pr = CoeffProbability(static_cast<double>(w.lo + i), p);
    (*probs)[i] = pr;
    total += pr;
  }
  (*probs)[w.Size()] = std::max(kProbFloor, 1.0 - total);
}

double SymbolCostBits(int v, const MixtureParams& p, const SymbolWindow& w) {
  if (w.Contains(v)) {
    return -std::log2(CoeffProbability(static_cast<double>(v), p));
  }
  double total = 0.0;
  for (int i = 0; i < w.Size(); ++i) {
    total += CoeffProbability(static_cast<double>(w.lo + i), p);
  }
  const double pe = std::max(kProbFloor, 1.0 - total);
  return -std::log2(pe) + 16.0;
}

}  // namespace pcomp
