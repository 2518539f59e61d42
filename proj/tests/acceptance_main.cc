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
//
// End-to-end acceptance gate. Each criterion prints exactly one line,
//   criterion N: PASS <measurements>
// or
//   criterion N: FAIL <measurements>
// and the process exits 0 only if all ten pass. Criteria 6-10 share one
// training pipeline (synthetic corpus, three trained models), so a failure
// early in that chain marks the dependent criteria failed as well.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "pcomp/base.h"
#include "pcomp/codec.h"
#include "pcomp/context.h"
#include "pcomp/gaussian.h"
#include "pcomp/image.h"
#include "pcomp/ingest.h"
#include "pcomp/lifting.h"
#include "pcomp/model.h"
#include "pcomp/nn.h"
#include "pcomp/quantize.h"
#include "pcomp/range_coder.h"
#include "pcomp/rng.h"
#include "pcomp/tape.h"
#include "pcomp/tensor.h"
#include "pcomp/train.h"
#include "pcomp/util.h"
#include "test_util.h"

namespace pcomp {
namespace {

// Pinned pass thresholds.
constexpr double kInvertTol = 1e-9;        // max |round trip - input|
constexpr double kInvertTimeLimit = 60.0;  // seconds for the 200 pairs
constexpr double kLogDetTol = 1e-6;        // |log |det J|| on 4x4 inputs
constexpr double kCoderSlackFactor = 1.02; // measured <= est * this + bits
constexpr double kCoderSlackBits = 64.0;
constexpr double kCoderTimeLimit = 120.0;  // seconds for the 1000 sequences
constexpr double kNormTol = 1e-6;          // |alphabet mass - 1|
constexpr double kGradTol = 1e-3;          // FD relative error
constexpr double kTrainTimeLimit = 14400.0;  // seconds for criterion 6

constexpr int kHeldOutCount = 10;
constexpr uint64_t kCorpusSeed = 424242;
constexpr uint64_t kHeldOutSeed = 777777;
constexpr uint64_t kModelInitSeed = 31337;

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Criterion {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return std::string(buf);
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (int64_t i = 0; i < a.Size(); ++i) {
    worst = std::max(worst, std::abs(a.v[i] - b.v[i]));
  }
  return worst;
}

// --------------------------------------------------------------------------
// Criterion 1: exact invertibility of the learned transform.

Criterion RunInvertibility() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int levels = 1 + i % 4;
    ParamSet ps;
    LiftingStage stage = LiftingStage::Create(ps, "lift");
    InitRng init(1000 + i);
    stage.Init(init);
    test::RandomizeParams(ps, 2000 + i, 0.2);

    const int h = 16 * (2 + i % 3);
    const int w = 16 * (2 + (i / 3) % 3);
    Tensor x = Tensor::Zeros({h, w});
    for (int64_t j = 0; j < x.Size(); ++j) {
      x.v[j] = 255.0 * UniformFromKey(StreamKey(9000 + i, j));
    }
    const Pyramid p = ForwardTransformEager(stage, x, levels);
    const Tensor back = InverseTransformEager(stage, p);
    worst = std::max(worst, MaxAbsDiff(x, back));
  }
  const double secs = SecondsSince(start);
  Criterion c;
  c.pass = worst <= kInvertTol && secs <= kInvertTimeLimit;
  c.detail = Format(
      "round-trip error %.3g (tol %.0e) over 200 random weight/image pairs, "
      "K in 1..4, %.1fs (limit %.0fs)",
      worst, kInvertTol, secs, kInvertTimeLimit);
  return c;
}

// --------------------------------------------------------------------------
// Criterion 2: the transform Jacobian has zero log-determinant.

Criterion RunLogDet() {
  constexpr int kN = 16;  // 4x4 input
  constexpr double kH = 1e-4;
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const int levels = 1 + draw % 2;
    ParamSet ps;
    LiftingStage stage = LiftingStage::Create(ps, "lift");
    InitRng init(40 + draw);
    stage.Init(init);
    test::RandomizeParams(ps, 140 + draw, 0.2);

    Tensor x = Tensor::Zeros({4, 4});
    for (int64_t j = 0; j < kN; ++j) {
      x.v[j] = 6.0 * UniformFromKey(StreamKey(7100 + draw, j)) - 3.0;
    }
    const auto flatten = [&](const Tensor& img) {
      const Pyramid p = ForwardTransformEager(stage, img, levels);
      std::vector<double> out;
      out.reserve(kN);
      for (const Tensor& band : p.bands) {
        out.insert(out.end(), band.v.begin(), band.v.end());
      }
      return out;
    };
    std::vector<double> jac(kN * kN);
    for (int j = 0; j < kN; ++j) {
      Tensor xp = x;
      xp.v[j] += kH;
      const std::vector<double> up = flatten(xp);
      Tensor xm = x;
      xm.v[j] -= kH;
      const std::vector<double> dn = flatten(xm);
      for (int i = 0; i < kN; ++i) {
        jac[static_cast<size_t>(i) * kN + j] = (up[i] - dn[i]) / (2.0 * kH);
      }
    }
    worst = std::max(worst, std::abs(test::LogAbsDetLU(jac, kN)));
  }
  Criterion c;
  c.pass = worst <= kLogDetTol;
  c.detail = Format(
      "|log|det J|| %.3g (tol %.0e) over 20 random weight draws on 4x4 "
      "inputs",
      worst, kLogDetTol);
  return c;
}

// --------------------------------------------------------------------------
// Criterion 3: the range coder hits the estimator's rate and decodes
// bit-exactly, escapes included.

MixtureParams RandomMixture(uint64_t key, double mean_span) {
  double raw[9];
  for (int i = 0; i < 3; ++i) {
    raw[i] = 4.0 * UniformFromKey(StreamKey(key, i)) - 2.0;
    raw[3 + i] =
        mean_span * (2.0 * UniformFromKey(StreamKey(key, 3 + i)) - 1.0);
    raw[6 + i] = 4.0 * UniformFromKey(StreamKey(key, 6 + i)) - 2.0;
  }
  return MixtureFromRaw(raw);
}

Criterion RunCoderRoundTrip() {
  const auto start = Clock::now();
  bool exact = true;
  double worst_excess = -1e9;
  for (int seq = 0; seq < 1000; ++seq) {
    const int len = 80 + static_cast<int>(HashKey(seq) % 41);
    std::vector<MixtureParams> mixes(len);
    std::vector<int> vals(len);
    RangeEncoder enc;
    double est_bits = 0.0;
    for (int k = 0; k < len; ++k) {
      const uint64_t key = StreamKey(0xC0DE0000ull + seq, k);
      const MixtureParams mp = RandomMixture(key, 20.0);
      const SymbolWindow w = CodingWindow(mp);
      std::vector<double> probs;
      BuildCodingDistribution(mp, w, &probs);
      const CodedCdf cdf = CodedCdf::FromProbs(probs);

      const uint32_t target = std::min<uint32_t>(
          kProbTotal - 1,
          static_cast<uint32_t>(UniformFromKey(HashKey(key)) * kProbTotal));
      const int sym = cdf.Find(target);
      int v;
      if (sym == w.Size()) {
        const int off = 1 + static_cast<int>(HashKey(key + 1) % 500);
        v = (k % 2 == 0) ? w.lo - off : w.hi + off;
        v = std::clamp(v, kSymbolMin, kSymbolMax);
        enc.Encode(cdf, sym);
        enc.EncodeRaw16(static_cast<uint16_t>(v - kSymbolMin));
      } else {
        v = w.lo + sym;
        enc.Encode(cdf, sym);
      }
      est_bits += SymbolCostBits(v, mp, w);
      mixes[k] = mp;
      vals[k] = v;
    }
    const std::vector<uint8_t> bytes = enc.Finish();
    const double measured = 8.0 * static_cast<double>(bytes.size());
    worst_excess = std::max(
        worst_excess, measured - (est_bits * kCoderSlackFactor + kCoderSlackBits));

    RangeDecoder dec(bytes.data(), bytes.size());
    for (int k = 0; k < len; ++k) {
      const SymbolWindow w = CodingWindow(mixes[k]);
      std::vector<double> probs;
      BuildCodingDistribution(mixes[k], w, &probs);
      const CodedCdf cdf = CodedCdf::FromProbs(probs);
      const int sym = dec.Decode(cdf);
      const int v = (sym == w.Size())
                        ? kSymbolMin + static_cast<int>(dec.DecodeRaw16())
                        : w.lo + sym;
      if (v != vals[k]) exact = false;
    }
  }
  const double secs = SecondsSince(start);
  Criterion c;
  c.pass = exact && worst_excess <= 0.0 && secs <= kCoderTimeLimit;
  c.detail = Format(
      "1000 sequences decoded %s, worst measured-vs-allowed gap %.1f bits "
      "(allowed = est*%.2f+%.0f), %.1fs (limit %.0fs)",
      exact ? "bit-exactly" : "WRONG", worst_excess, kCoderSlackFactor,
      kCoderSlackBits, secs, kCoderTimeLimit);
  return c;
}

// --------------------------------------------------------------------------
// Criterion 4: pre-flooring mixture mass over the full alphabet is 1.

Criterion RunNormalization() {
  double worst = 0.0;
  for (int m = 0; m < 1000; ++m) {
    const MixtureParams mp = RandomMixture(0xAB5AB5ull + m, 1000.0);
    double sum = 0.0;
    for (int v = kSymbolMin; v <= kSymbolMax; ++v) {
      sum += CoeffProbabilityUnfloored(static_cast<double>(v), mp);
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  Criterion c;
  c.pass = worst <= kNormTol;
  c.detail = Format(
      "|sum - 1| %.3g (tol %.0e) over 1000 mixtures, full signed-16 "
      "alphabet",
      worst, kNormTol);
  return c;
}

// --------------------------------------------------------------------------
// Criterion 5: full-objective gradients match central finite differences
// for every parameter group.

Criterion RunGradientFidelity() {
  Model m = Model::Create(2, 5, 4242);
  test::RandomizeParams(m.params, 888, 0.2);
  Tensor patch = Tensor::Zeros({16, 16});
  for (int64_t j = 0; j < patch.Size(); ++j) {
    patch.v[j] = std::floor(255.0 * UniformFromKey(StreamKey(606, j)));
  }
  const auto build = [&](Tape& t) {
    return BuildLoss(t, m, patch, 8.0, 909).loss;
  };

  m.params.ZeroGrads();
  std::vector<Parameter*> probed;
  for (const auto& p : m.params.items()) {
    if (p->trainable) probed.push_back(p.get());
  }
  {
    Tape t;
    t.Backward(build(t));
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(probed.size());
  for (Parameter* p : probed) analytic.push_back(p->grad.v);

  const auto eval = [&]() {
    Tape t;
    return t.ScalarVal(build(t));
  };
  constexpr double kH = 1e-5;
  double worst = 0.0;
  int probes = 0;
  for (size_t pi = 0; pi < probed.size(); ++pi) {
    Parameter* p = probed[pi];
    const int64_t n = p->value.Size();
    int64_t idx[3] = {0, n / 2, n - 1};
    for (int k = 0; k < 3; ++k) {
      if (k > 0 && idx[k] == idx[k - 1]) continue;
      const int64_t i = idx[k];
      const double keep = p->value.v[i];
      p->value.v[i] = keep + kH;
      const double up = eval();
      p->value.v[i] = keep - kH;
      const double dn = eval();
      p->value.v[i] = keep;
      const double fd = (up - dn) / (2.0 * kH);
      worst = std::max(worst, test::RelErr(analytic[pi][i], fd, 1e-6));
      ++probes;
    }
  }
  Criterion c;
  c.pass = worst <= kGradTol;
  c.detail = Format(
      "FD relative error %.3g (tol %.0e) over %d probes spanning %d "
      "parameter tensors, 16x16 input",
      worst, kGradTol, probes, static_cast<int>(probed.size()));
  return c;
}

// --------------------------------------------------------------------------
// Criteria 6-10 share a training pipeline: a 200-image synthetic corpus,
// one model per lambda in {8, 4, 16}, and ten held-out images.

struct TrainingArtifacts {
  std::optional<test::TempDir> work;
  std::string corpus_dir;
  bool corpus_ready = false;
  std::vector<Image> held;

  std::optional<Model> m4, m16;
  std::vector<std::vector<uint8_t>> c4, c16;  // containers per held image

  // Filled by criterion 9's sweep, consumed by criterion 10.
  bool sweep_done = false;
  bool encodes_identical = false;
  int containers_hashed = 0;
};

double MeanLossInRange(const std::vector<StepStats>& hist, int from_step,
                       int to_step) {
  double acc = 0.0;
  int n = 0;
  for (const StepStats& s : hist) {
    if (s.step > from_step && s.step <= to_step) {
      acc += s.loss;
      ++n;
    }
  }
  return n > 0 ? acc / n : 0.0;
}

Model TrainLambdaModel(const TrainingArtifacts& art, double lambda,
                       int total_steps, int warm_steps, int checkpoint_every,
                       uint64_t train_seed, const std::string& name,
                       std::vector<StepStats>* hist) {
  Model m = Model::Create(4, 5, kModelInitSeed);
  TrainConfig cfg;
  cfg.lambda = lambda;
  cfg.total_steps = total_steps;
  cfg.warm_steps = warm_steps;
  cfg.batch = 4;
  cfg.patch = 64;
  cfg.lr = 3e-4;
  cfg.seed = train_seed;
  cfg.checkpoint_every = checkpoint_every;
  cfg.data_dir = art.corpus_dir;
  cfg.out_model = art.work->Sub(name);
  TrainModel(m, cfg, [&](const StepStats& s) {
    if (hist != nullptr) hist->push_back(s);
  });
  return m;
}

Criterion RunTrainingSanity(TrainingArtifacts& art) {
  const auto start = Clock::now();
  art.work.emplace("acceptance");
  art.corpus_dir = art.work->Sub("corpus");

  IngestOptions io;
  io.out_dir = art.corpus_dir;
  io.synth_count = 200;
  io.synth_size = 96;
  io.seed = kCorpusSeed;
  io.multiple = 16;
  const IngestReport report = RunIngest(io);
  PCOMP_CHECK(report.written == 200, ErrorKind::kContract,
              "corpus ingest came up short");
  art.corpus_ready = true;
  for (int i = 0; i < kHeldOutCount; ++i) {
    art.held.push_back(SyntheticImage(kHeldOutSeed, i, 96));
  }

  std::vector<StepStats> hist;
  const Model m8 =
      TrainLambdaModel(art, 8.0, 450, 150, 150, 1001, "m8.pcmp", &hist);
  const double mean1 = MeanLossInRange(hist, 50, 150);
  const double mean2 = MeanLossInRange(hist, 200, 300);
  const double mean3 = MeanLossInRange(hist, 350, 450);
  const bool monotone = mean1 > mean2 && mean2 > mean3;

  const Model init = Model::Create(4, 5, kModelInitSeed);
  double psnr_trained = 0.0, psnr_init = 0.0;
  double bpp_trained = 0.0, bpp_init = 0.0;
  SampleSpec spec;
  spec.alpha = 0.0;
  spec.count = 1;
  spec.seed = 1;
  for (const Image& img : art.held) {
    const std::vector<uint8_t> bt = EncodeImage(m8, img);
    const std::vector<uint8_t> bi = EncodeImage(init, img);
    psnr_trained += CompareImages(img, DecodeContainer(m8, bt, spec)[0]).psnr;
    psnr_init += CompareImages(img, DecodeContainer(init, bi, spec)[0]).psnr;
    bpp_trained += InspectContainer(bt).Bpp();
    bpp_init += InspectContainer(bi).Bpp();
  }
  psnr_trained /= kHeldOutCount;
  psnr_init /= kHeldOutCount;
  bpp_trained /= kHeldOutCount;
  bpp_init /= kHeldOutCount;

  const double secs = SecondsSince(start);
  Criterion c;
  c.pass = monotone && psnr_trained > psnr_init && bpp_trained <= bpp_init &&
           secs <= kTrainTimeLimit;
  c.detail = Format(
      "trailing-100 loss %.4f > %.4f > %.4f %s; alpha=0 PSNR %.2f dB vs "
      "init %.2f dB; bpp %.4f vs init %.4f; %.0fs (limit %.0fs)",
      mean1, mean2, mean3, monotone ? "(monotone)" : "(NOT monotone)",
      psnr_trained, psnr_init, bpp_trained, bpp_init, secs, kTrainTimeLimit);
  return c;
}

Criterion RunRateLambda(TrainingArtifacts& art) {
  PCOMP_CHECK(art.corpus_ready, ErrorKind::kContract,
              "prerequisite corpus missing (criterion 6 setup failed)");
  art.m4.emplace(
      TrainLambdaModel(art, 4.0, 400, 100, 100, 1004, "m4.pcmp", nullptr));
  art.m16.emplace(
      TrainLambdaModel(art, 16.0, 400, 100, 100, 1016, "m16.pcmp", nullptr));

  double bpp4 = 0.0, bpp16 = 0.0;
  for (const Image& img : art.held) {
    art.c4.push_back(EncodeImage(*art.m4, img));
    art.c16.push_back(EncodeImage(*art.m16, img));
    bpp4 += InspectContainer(art.c4.back()).Bpp();
    bpp16 += InspectContainer(art.c16.back()).Bpp();
  }
  bpp4 /= kHeldOutCount;
  bpp16 /= kHeldOutCount;

  Criterion c;
  c.pass = bpp16 < bpp4;
  c.detail = Format(
      "held-out mean bpp %.4f at lambda=16 vs %.4f at lambda=4 (want "
      "lambda=16 lower)",
      bpp16, bpp4);
  return c;
}

Criterion RunScaleTrend(const TrainingArtifacts& art) {
  PCOMP_CHECK(art.m4.has_value() && art.m16.has_value(),
              ErrorKind::kContract,
              "prerequisite models missing (criterion 7 failed)");
  double s4 = 0.0, s16 = 0.0;
  for (int i = 0; i < kHeldOutCount; ++i) {
    s4 += MeanPosteriorScale(*art.m4, art.c4[i]);
    s16 += MeanPosteriorScale(*art.m16, art.c16[i]);
  }
  s4 /= kHeldOutCount;
  s16 /= kHeldOutCount;
  Criterion c;
  c.pass = s16 > s4;
  c.detail = Format(
      "mean posterior scale %.4f at lambda=16 vs %.4f at lambda=4 (want "
      "lower-rate model larger)",
      s16, s4);
  return c;
}

double DetailEnergy(const Image& img) {
  const Pyramid p = Cdf97Forward(LumaPlane(img), 1);
  double acc = 0.0;
  int64_t n = 0;
  for (int b = 1; b < 4; ++b) {
    for (double v : p.bands[b].v) {
      acc += v * v;
      ++n;
    }
  }
  return acc / static_cast<double>(n);
}

Criterion RunDiversity(TrainingArtifacts& art) {
  PCOMP_CHECK(art.m4.has_value(), ErrorKind::kContract,
              "prerequisite lambda=4 model missing (criterion 7 failed)");
  const std::vector<double> alphas = {0.0, 0.3, 0.5, 0.7, 1.0};
  constexpr int kDraws = 8;
  constexpr uint64_t kDrawSeed = 13579;

  std::vector<double> mse(alphas.size(), 0.0), hf(alphas.size(), 0.0);
  art.encodes_identical = true;
  for (const Image& img : art.held) {
    std::array<uint8_t, 16> first_digest{};
    for (size_t a = 0; a < alphas.size(); ++a) {
      const std::vector<uint8_t> bytes = EncodeImage(*art.m4, img);
      const std::array<uint8_t, 16> digest =
          Digest128(bytes.data(), bytes.size());
      if (a == 0) {
        first_digest = digest;
      } else if (digest != first_digest) {
        art.encodes_identical = false;
      }
      ++art.containers_hashed;

      SampleSpec spec;
      spec.alpha = alphas[a];
      spec.count = kDraws;
      spec.seed = kDrawSeed;
      const std::vector<Image> recons = DecodeContainer(*art.m4, bytes, spec);
      for (const Image& rec : recons) {
        mse[a] += CompareImages(img, rec).mse;
        hf[a] += DetailEnergy(rec);
      }
    }
  }
  const double norm = static_cast<double>(kHeldOutCount) * kDraws;
  for (size_t a = 0; a < alphas.size(); ++a) {
    mse[a] /= norm;
    hf[a] /= norm;
  }
  bool mse_mono = true, hf_mono = true;
  for (size_t a = 1; a < alphas.size(); ++a) {
    if (mse[a] < mse[a - 1]) mse_mono = false;
    if (hf[a] < hf[a - 1]) hf_mono = false;
  }
  art.sweep_done = true;

  Criterion c;
  c.pass = mse_mono && hf_mono;
  c.detail = Format(
      "over alpha {0, .3, .5, .7, 1}: mean MSE %.3f %.3f %.3f %.3f %.3f "
      "(%s), detail energy %.3f %.3f %.3f %.3f %.3f (%s), %d draws each",
      mse[0], mse[1], mse[2], mse[3], mse[4],
      mse_mono ? "non-decreasing" : "NOT monotone", hf[0], hf[1], hf[2],
      hf[3], hf[4], hf_mono ? "non-decreasing" : "NOT monotone", kDraws);
  return c;
}

Criterion RunSingleBitstream(const TrainingArtifacts& art) {
  PCOMP_CHECK(art.sweep_done, ErrorKind::kContract,
              "prerequisite sweep missing (criterion 9 failed)");
  Criterion c;
  c.pass = art.encodes_identical;
  c.detail = Format(
      "%d re-encoded containers across the alpha sweep, per-image digests "
      "%s",
      art.containers_hashed,
      art.encodes_identical ? "all identical" : "DIFFER");
  return c;
}

}  // namespace
}  // namespace pcomp

int main() {
  using pcomp::Criterion;
  std::vector<Criterion> results(10);
  const auto report = [&](int idx, const Criterion& c) {
    results[idx] = c;
    std::printf("criterion %d: %s %s\n", idx + 1, c.pass ? "PASS" : "FAIL",
                c.detail.c_str());
    std::fflush(stdout);
  };
  const auto guarded = [&](int idx, auto&& fn) {
    Criterion c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = std::string("exception: ") + e.what();
    }
    report(idx, c);
  };

  guarded(0, pcomp::RunInvertibility);
  guarded(1, pcomp::RunLogDet);
  guarded(2, pcomp::RunCoderRoundTrip);
  guarded(3, pcomp::RunNormalization);
  guarded(4, pcomp::RunGradientFidelity);

  pcomp::TrainingArtifacts art;
  guarded(5, [&] { return pcomp::RunTrainingSanity(art); });
  guarded(6, [&] { return pcomp::RunRateLambda(art); });
  guarded(7, [&] { return pcomp::RunScaleTrend(art); });
  guarded(8, [&] { return pcomp::RunDiversity(art); });
  guarded(9, [&] { return pcomp::RunSingleBitstream(art); });

  bool all = true;
  for (const Criterion& c : results) all = all && c.pass;
  std::printf("acceptance: %s\n", all ? "ALL PASS" : "FAILURES PRESENT");
  return all ? 0 : 1;
}
