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

#include <cmath>
#include <optional>
#include <vector>

#include "doctest.h"
#include "pcomp/context.h"
#include "pcomp/gaussian.h"
#include "pcomp/lifting.h"
#include "pcomp/nn.h"
#include "pcomp/quantize.h"
#include "pcomp/range_coder.h"
#include "pcomp/rng.h"
#include "pcomp/tape.h"
#include "pcomp/tensor.h"
#include "test_util.h"

namespace pcomp {
namespace {

Tensor SmallIntBand(std::vector<int> shape, uint64_t key, int span) {
  Tensor t = Tensor::Zeros(std::move(shape));
  for (int64_t i = 0; i < t.Size(); ++i) {
    t.v[i] = static_cast<double>(
        static_cast<int>(HashKey(StreamKey(key, i)) % (2 * span + 1)) - span);
  }
  return t;
}

TEST_CASE("causal and feature counts") {
  CHECK(CausalCount(5) == 12);
  CHECK(CausalCount(3) == 4);
  CHECK(ContextFeatureCount(5, true) == 38);
  CHECK(ContextFeatureCount(5, false) == 13);
  CHECK(ContextFeatureCount(3, true) == 14);
}

TEST_CASE("context row walks rows above then the left neighbors") {
  // Band values encode their own coordinates so the layout is self-evident.
  Tensor band = Tensor::Zeros({6, 6});
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) band.At(r, c) = 10.0 * r + c;
  }
  Tensor ref = Tensor::Zeros({6, 6});
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) ref.At(r, c) = 1000.0 + 10.0 * r + c;
  }

  std::vector<double> row(38);
  BuildContextRow(band, &ref, 3, 3, 5, 2, row.data());
  // First the two full rows above (r-2 then r-1), columns c-2..c+2.
  CHECK(row[0] == band.At(1, 1));
  CHECK(row[4] == band.At(1, 5));
  CHECK(row[5] == band.At(2, 1));
  CHECK(row[9] == band.At(2, 5));
  // Then the strictly-left part of the current row.
  CHECK(row[10] == band.At(3, 1));
  CHECK(row[11] == band.At(3, 2));
  // Reference block in plain row-major order.
  CHECK(row[12] == ref.At(1, 1));
  CHECK(row[24] == ref.At(3, 3));
  CHECK(row[36] == ref.At(5, 5));
  // Level index last.
  CHECK(row[37] == 2.0);

  // Out-of-band positions read as zero.
  BuildContextRow(band, &ref, 0, 0, 5, 1, row.data());
  for (int k = 0; k < 12; ++k) CHECK(row[k] == 0.0);
  CHECK(row[12] == 0.0);           // ref (-2,-2) off the plane
  CHECK(row[24] == ref.At(0, 0));  // ref center
  CHECK(row[37] == 1.0);
}

TEST_CASE("gather plans agree with the scalar context builder") {
  const int h = 7, w = 5, window = 5;
  Tensor band = SmallIntBand({h, w}, 5001, 9);
  Tensor ref = SmallIntBand({h, w}, 5002, 120);
  const auto causal = CausalPlan(h, w, window);
  const auto refplan = ReferencePlan(h, w, window);
  const int nc = CausalCount(window);
  REQUIRE(static_cast<int>(causal->size()) == h * w * nc);
  REQUIRE(static_cast<int>(refplan->size()) == h * w * window * window);

  std::vector<double> row(ContextFeatureCount(window, true));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      BuildContextRow(band, &ref, r, c, window, 3, row.data());
      const int base_c = (r * w + c) * nc;
      for (int k = 0; k < nc; ++k) {
        const int32_t idx = (*causal)[base_c + k];
        const double want = idx < 0 ? 0.0 : band.v[idx];
        CHECK(want == row[k]);
      }
      const int base_r = (r * w + c) * window * window;
      for (int k = 0; k < window * window; ++k) {
        const int32_t idx = (*refplan)[base_r + k];
        const double want = idx < 0 ? 0.0 : ref.v[idx];
        CHECK(want == row[nc + k]);
      }
    }
  }
}

TEST_CASE("causal plan never points at or after the current cell") {
  const int h = 6, w = 6, window = 5;
  const auto plan = CausalPlan(h, w, window);
  const int nc = CausalCount(window);
  for (int pos = 0; pos < h * w; ++pos) {
    for (int k = 0; k < nc; ++k) {
      const int32_t idx = (*plan)[pos * nc + k];
      if (idx >= 0) CHECK(idx < pos);  // raster order equals coding order
    }
  }
}

TEST_CASE("band rate matches a per coefficient evaluation") {
  ParamSet params;
  ContextModel model = ContextModel::Create(params, 5);
  InitRng rng(21);
  model.Init(rng);
  test::RandomizeParams(params, 6001, 0.1);

  Tensor band = SmallIntBand({6, 8}, 6002, 6);
  Tensor ref = SmallIntBand({6, 8}, 6003, 100);
  const BandId id{2, Orientation::kLH};

  Tape t;
  Var nll = BandRateNll(t, model, t.Input(band), t.Input(ref), id);
  const double batched = t.ScalarVal(t.Sum(nll));

  double direct = 0.0;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 8; ++c) {
      const MixtureParams p = PredictMixture(model, band, &ref, r, c, id);
      direct += -std::log(
          CoeffProbabilityUnfloored(band.At(r, c), p));
    }
  }
  CHECK(batched == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("lowpass band rate needs no reference plane") {
  ParamSet params;
  ContextModel model = ContextModel::Create(params, 5);
  InitRng rng(22);
  model.Init(rng);
  test::RandomizeParams(params, 6101, 0.1);

  Tensor band = SmallIntBand({4, 4}, 6102, 6);
  const BandId id{3, Orientation::kLL};
  Tape t;
  Var nll = BandRateNll(t, model, t.Input(band), std::nullopt, id);
  const double batched = t.ScalarVal(t.Sum(nll));
  double direct = 0.0;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const MixtureParams p = PredictMixture(model, band, nullptr, r, c, id);
      direct += -std::log(CoeffProbabilityUnfloored(band.At(r, c), p));
    }
  }
  CHECK(batched == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("prediction depends on the causal context") {
  ParamSet params;
  ContextModel model = ContextModel::Create(params, 5);
  InitRng rng(23);
  model.Init(rng);
  test::RandomizeParams(params, 6201, 0.2);
  Tensor band = SmallIntBand({6, 6}, 6202, 6);
  Tensor ref = SmallIntBand({6, 6}, 6203, 100);
  const BandId id{1, Orientation::kHL};
  const MixtureParams before = PredictMixture(model, band, &ref, 3, 3, id);
  band.At(2, 3) += 40.0;  // causal neighbor
  const MixtureParams after = PredictMixture(model, band, &ref, 3, 3, id);
  CHECK(before.mu[0] != after.mu[0]);
  // Future positions must not leak into the prediction.
  band.At(4, 3) += 40.0;
  band.At(3, 4) += 40.0;
  const MixtureParams still = PredictMixture(model, band, &ref, 3, 3, id);
  CHECK(still.mu[0] == after.mu[0]);
  CHECK(still.w[1] == after.w[1]);
  CHECK(still.s[2] == after.s[2]);
}

TEST_CASE("band rate gradients flow into the heads") {
  ParamSet params;
  ContextModel model = ContextModel::Create(params, 3);
  InitRng rng(24);
  model.Init(rng);
  test::RandomizeParams(params, 6301, 0.1);
  Tensor band = SmallIntBand({4, 4}, 6302, 5);
  Tensor ref = SmallIntBand({4, 4}, 6303, 50);
  const BandId id{1, Orientation::kHH};
  std::vector<Parameter*> raw;
  for (const auto& p : params.items()) raw.push_back(p.get());
  auto build = [&](Tape& t) {
    return t.Sum(BandRateNll(t, model, t.Input(band), t.Input(ref), id));
  };
  // The summed objective is ~50, so finite-difference cancellation noise is
  // a few 1e-10 absolute; against near-zero gradient entries that shows up
  // as ~1e-5 relative even when the analytic gradients are right.
  CHECK(test::MaxGradError(build, raw, 1e-5, 17) < 1e-4);
}

TEST_CASE("coding window covers the mixture support") {
  MixtureParams p;
  p.w[0] = 0.6;
  p.w[1] = 0.3;
  p.w[2] = 0.1;
  p.mu[0] = 4.0;
  p.mu[1] = -10.0;
  p.mu[2] = 12.0;
  p.s[0] = 1.0;
  p.s[1] = 2.0;
  p.s[2] = 0.5;
  const SymbolWindow w = CodingWindow(p);
  CHECK(w.lo == -29);  // floor(-10 - 9*2) - 1
  CHECK(w.hi == 18);   // ceil(12 + 9*0.5) + 1
  CHECK(w.Contains(0));
  CHECK_FALSE(w.Contains(-30));
}

TEST_CASE("coding window clamps to the alphabet") {
  MixtureParams p;
  for (int n = 0; n < 3; ++n) {
    p.w[n] = 1.0 / 3.0;
    p.mu[n] = 32760.0;
    p.s[n] = 5.0;
  }
  const SymbolWindow w = CodingWindow(p);
  CHECK(w.hi == kSymbolMax);
  CHECK(w.lo >= kSymbolMin);
  CHECK(w.lo <= 32760 - 45);
}

TEST_CASE("huge scales cap the window around the dominant mean") {
  MixtureParams p;
  p.w[0] = 0.2;
  p.w[1] = 0.7;  // dominant
  p.w[2] = 0.1;
  p.mu[0] = -2000.0;
  p.mu[1] = 500.0;
  p.mu[2] = 2000.0;
  p.s[0] = 4000.0;
  p.s[1] = 3000.0;
  p.s[2] = 4000.0;
  const SymbolWindow w = CodingWindow(p);
  CHECK(w.Size() == kMaxCodingWindow);
  CHECK(w.lo == 500 - kMaxCodingWindow / 2);
  CHECK(w.hi == w.lo + kMaxCodingWindow - 1);

  // A dominant mean near the alphabet edge keeps the window inside it.
  p.mu[1] = 32000.0;
  const SymbolWindow e = CodingWindow(p);
  CHECK(e.Size() == kMaxCodingWindow);
  CHECK(e.hi == kSymbolMax);
}

TEST_CASE("coding distribution floors entries and adds an escape") {
  MixtureParams p;
  for (int n = 0; n < 3; ++n) {
    p.w[n] = 1.0 / 3.0;
    p.mu[n] = 0.0;
    p.s[n] = 0.8;
  }
  const SymbolWindow w = CodingWindow(p);
  std::vector<double> probs;
  BuildCodingDistribution(p, w, &probs);
  REQUIRE(static_cast<int>(probs.size()) == w.Size() + 1);
  double total = 0.0;
  for (double pr : probs) {
    CHECK(pr >= kProbFloor);
    total += pr;
  }
  // The window spans +-9 sigma, so nearly all real mass is inside and the
  // floors only add ~window_size * 2^-16 of overshoot.
  CHECK(total >= 1.0);
  CHECK(total < 1.0 + (w.Size() + 2) * kProbFloor);
  // The center symbol carries the most mass.
  const int center_index = -w.lo;
  for (int i = 0; i < w.Size(); ++i) {
    CHECK(probs[center_index] >= probs[i]);
  }
}

TEST_CASE("symbol cost matches the coded distribution") {
  MixtureParams p;
  p.w[0] = 0.5;
  p.w[1] = 0.25;
  p.w[2] = 0.25;
  p.mu[0] = 1.0;
  p.mu[1] = -3.0;
  p.mu[2] = 6.0;
  p.s[0] = 0.7;
  p.s[1] = 1.3;
  p.s[2] = 2.1;
  const SymbolWindow w = CodingWindow(p);
  std::vector<double> probs;
  BuildCodingDistribution(p, w, &probs);
  for (int v : {0, 1, -3, 6, w.lo, w.hi}) {
    CHECK(SymbolCostBits(v, p, w) ==
          doctest::Approx(-std::log2(probs[v - w.lo])).epsilon(1e-12));
  }
  // Escape cost is the escape mass plus 16 raw bits.
  const double esc = SymbolCostBits(20000, p, w);
  CHECK(esc == doctest::Approx(-std::log2(probs[w.Size()]) + 16.0)
                   .epsilon(1e-12));
}

TEST_CASE("estimator tracks real coded length across random models") {
  // Mini version of the rate accounting check: symbols drawn from each
  // model's own coding distribution, estimate from SymbolCostBits, actual
  // bits from the range coder.
  double est_bits = 0.0;
  RangeEncoder enc;
  std::vector<int> recorded;
  std::vector<MixtureParams> models;
  for (int i = 0; i < 400; ++i) {
    const uint64_t k = StreamKey(8800, i);
    double raw[9];
    for (int j = 0; j < 9; ++j) {
      raw[j] = 4.0 * (2.0 * UniformFromKey(StreamKey(k, j)) - 1.0);
    }
    raw[3] *= 5.0;
    const MixtureParams p = MixtureFromRaw(raw);
    const SymbolWindow w = CodingWindow(p);
    std::vector<double> probs;
    BuildCodingDistribution(p, w, &probs);
    const CodedCdf cdf = CodedCdf::FromProbs(probs);

    // Inverse-CDF sample so low-probability symbols appear occasionally.
    const double u = UniformFromKey(StreamKey(k, 99));
    double acc = 0.0;
    int sym = w.Size();
    double tot = 0.0;
    for (double pr : probs) tot += pr;
    for (size_t s = 0; s < probs.size(); ++s) {
      acc += probs[s] / tot;
      if (u < acc) {
        sym = static_cast<int>(s);
        break;
      }
    }
    const int value = sym == w.Size() ? kSymbolMin + 12345 : w.lo + sym;
    est_bits += SymbolCostBits(value, p, w);
    if (sym == w.Size()) {
      enc.Encode(cdf, w.Size());
      enc.EncodeRaw16(static_cast<uint16_t>(value - kSymbolMin));
    } else {
      enc.Encode(cdf, sym);
    }
    recorded.push_back(value);
    models.push_back(p);
  }
  const std::vector<uint8_t> bytes = enc.Finish();
  CHECK(8.0 * bytes.size() <= est_bits * 1.02 + 64.0);

  RangeDecoder dec(bytes.data(), bytes.size());
  for (size_t i = 0; i < recorded.size(); ++i) {
    const SymbolWindow w = CodingWindow(models[i]);
    std::vector<double> probs;
    BuildCodingDistribution(models[i], w, &probs);
    const CodedCdf cdf = CodedCdf::FromProbs(probs);
    const int sym = dec.Decode(cdf);
    const int value = sym == w.Size()
                          ? kSymbolMin + static_cast<int>(dec.DecodeRaw16())
                          : w.lo + sym;
    CHECK(value == recorded[i]);
  }
}

}  // namespace
}  // namespace pcomp
