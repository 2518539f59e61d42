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

#include "pcomp/train.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>

#include "pcomp/base.h"
#include "pcomp/image.h"
#include "pcomp/ingest.h"
#include "pcomp/quantize.h"
#include "pcomp/rng.h"
#include "pcomp/util.h"

namespace pcomp {

namespace {

constexpr double kLn2 = 0.6931471805599453;

Tensor ExtractPatch(const Tensor& plane, int r0, int c0, int n, bool hflip,
                    bool vflip) {
  Tensor p = Tensor::Zeros({n, n});
  for (int r = 0; r < n; ++r) {
    const int sr = vflip ? r0 + n - 1 - r : r0 + r;
    for (int c = 0; c < n; ++c) {
      const int sc = hflip ? c0 + n - 1 - c : c0 + c;
      p.At(r, c) = plane.At(sr, sc);
    }
  }
  return p;
}

void CheckInvertibility(const Model& m, uint64_t probe_seed) {
  const int side = 2 * (1 << m.levels);
  Tensor plane = Tensor::Zeros({side, side});
  for (int64_t i = 0; i < plane.Size(); ++i) {
    plane.v[i] = 255.0 * UniformFromKey(StreamKey(probe_seed, i));
  }
  const Pyramid pyr = ForwardTransformEager(m.lift, plane, m.levels);
  const Tensor back = InverseTransformEager(m.lift, pyr);
  double worst = 0.0;
  for (int64_t i = 0; i < plane.Size(); ++i) {
    worst = std::max(worst, std::abs(back.v[i] - plane.v[i]));
  }
  PCOMP_CHECK(worst <= 1e-9, ErrorKind::kContract,
              "transform lost exact invertibility at checkpoint");
}

void SaveOptimizer(const Adam& opt, const std::string& path) {
  const ParamSet state = opt.SerializeState();
  const std::vector<uint8_t> bytes = SerializeParams(state);
  WriteFile(path, bytes.data(), bytes.size());
}

}  // namespace

LossBreakdown BuildLoss(Tape& t, const Model& m, const Tensor& patch,
                        double lambda, uint64_t noise_seed) {
  PCOMP_CHECK(patch.Rank() == 2, ErrorKind::kInvalidShape,
              "training patch must be rank-2");
  Var x = t.Input(patch);
  PyramidVars pv = ForwardTransform(t, m.lift, x, m.levels);
  const std::vector<BandId> order = BandOrder(m.levels);

  // Soft-quantized bands: clean coefficients plus fixed unit-cell noise.
  std::vector<Var> soft;
  uint64_t noise_base = 0;
  int64_t n_coeffs = 0;
  for (size_t i = 0; i < order.size(); ++i) {
    const std::vector<int> shape = t.Val(pv.bands[i]).shape;
    const int64_t size = NumElements(shape);
    soft.push_back(t.Add(
        pv.bands[i], t.Input(QuantizeNoise(shape, noise_seed, noise_base))));
    noise_base += static_cast<uint64_t>(size);
    n_coeffs += size;
  }

  // Reconstructed lowpass chain from the soft values; conditions both the
  // context model and the posterior, exactly as decoded values do at
  // inference.
  std::vector<Var> ll_ref(m.levels + 1);
  ll_ref[m.levels] = soft[0];
  for (int k = m.levels; k >= 2; --k) {
    ll_ref[k - 1] = InverseLevel(
        t, m.lift, ll_ref[k], soft[BandSlot(m.levels, {k, Orientation::kHL})],
        soft[BandSlot(m.levels, {k, Orientation::kLH})],
        soft[BandSlot(m.levels, {k, Orientation::kHH})]);
  }

  LossBreakdown out;
  std::vector<Var> mu_bands(order.size());
  bool first = true;
  for (size_t i = 0; i < order.size(); ++i) {
    const BandId& id = order[i];
    std::optional<Var> ref;
    if (id.orientation != Orientation::kLL) ref = ll_ref[id.level];
    Var band_rate = t.Sum(BandRateNll(t, m.context, soft[i], ref, id));
    BandPosterior post = m.posterior.Apply(t, soft[i], ref, id);
    Var band_nll = t.Sum(t.GaussianNll(pv.bands[i], post.mu, post.s));
    mu_bands[i] = post.mu;
    out.rate = first ? band_rate : t.Add(out.rate, band_rate);
    out.nll = first ? band_nll : t.Add(out.nll, band_nll);
    first = false;
  }

  PyramidVars mean_field{m.levels, pv.rows, pv.cols, mu_bands};
  Var x0 = InverseTransform(t, m.lift, mean_field);
  out.sse = t.Sum(t.Square(t.Sub(x0, x)));

  out.n_coeffs = n_coeffs;
  out.n_pixels = patch.Size();
  const double cn = static_cast<double>(n_coeffs);
  out.loss = t.Add(
      t.Add(t.Scale(out.nll, 1.0 / cn),
            t.Scale(out.sse, 1.0 / static_cast<double>(out.n_pixels))),
      t.Scale(out.rate, lambda * kRateWeight / cn));
  return out;
}

void TrainModel(Model& m, const TrainConfig& cfg,
                const std::function<void(const StepStats&)>& on_step) {
  PCOMP_CHECK(cfg.batch >= 1, ErrorKind::kUsage, "batch must be positive");
  PCOMP_CHECK(cfg.total_steps >= 1, ErrorKind::kUsage,
              "step count must be positive");
  PCOMP_CHECK(cfg.warm_steps >= 0 && cfg.warm_steps <= cfg.total_steps,
              ErrorKind::kUsage, "warm-start steps out of range");
  PCOMP_CHECK(cfg.patch >= (1 << m.levels) &&
                  cfg.patch % (1 << m.levels) == 0,
              ErrorKind::kUsage,
              "patch size must be a positive multiple of 2^levels");
  PCOMP_CHECK(!cfg.out_model.empty(), ErrorKind::kUsage,
              "training needs an output model path");

  std::vector<Tensor> planes;
  for (const std::string& path : ListImageFiles(cfg.data_dir)) {
    Tensor plane = LumaPlane(LoadImage(path));
    if (plane.shape[0] >= cfg.patch && plane.shape[1] >= cfg.patch) {
      planes.push_back(std::move(plane));
    }
  }
  PCOMP_CHECK(!planes.empty(), ErrorKind::kData,
              "no usable training images (>= patch size) in " + cfg.data_dir);

  Adam opt(cfg.lr, cfg.beta1, cfg.beta2);
  int start_step = 0;
  if (cfg.resume) {
    opt.RestoreState(DeserializeParams(ReadFile(cfg.out_model + ".opt")));
    start_step = static_cast<int>(opt.step_count());
    PCOMP_CHECK(start_step <= cfg.total_steps, ErrorKind::kUsage,
                "resume step already past the requested step count");
  }

  const std::string csv_path =
      cfg.csv_path.empty() ? cfg.out_model + ".csv" : cfg.csv_path;
  std::ofstream csv(csv_path, cfg.resume ? std::ios::app : std::ios::trunc);
  PCOMP_CHECK(csv.good(), ErrorKind::kIo, "cannot write " + csv_path);
  if (!cfg.resume) csv << "step,loss,nll,reg_mse,bpp_est\n";

  std::mt19937_64 rng(StreamKey(cfg.seed, static_cast<uint64_t>(start_step)));
  const double ln_batch = static_cast<double>(cfg.batch);

  for (int step = start_step; step < cfg.total_steps; ++step) {
    m.lift.SetTrainable(step >= cfg.warm_steps);

    double loss_sum = 0.0, nll_sum = 0.0, mse_sum = 0.0, bpp_sum = 0.0;
    for (int b = 0; b < cfg.batch; ++b) {
      const Tensor& plane = planes[rng() % planes.size()];
      const int r0 =
          static_cast<int>(rng() % (plane.shape[0] - cfg.patch + 1));
      const int c0 =
          static_cast<int>(rng() % (plane.shape[1] - cfg.patch + 1));
      const Tensor patch = ExtractPatch(plane, r0, c0, cfg.patch,
                                        (rng() & 1) != 0, (rng() & 1) != 0);
      const uint64_t noise_seed = StreamKey(
          cfg.seed ^ 0x5EEDF00Dull,
          static_cast<uint64_t>(step) * cfg.batch + b);

      Tape t;
      LossBreakdown lb = BuildLoss(t, m, patch, cfg.lambda, noise_seed);
      const double lv = t.ScalarVal(lb.loss);
      if (!std::isfinite(lv)) {
        std::fprintf(stderr,
                     "step %d item %d: loss=%g nll=%g sse=%g rate=%g\n",
                     step + 1, b, lv, t.ScalarVal(lb.nll),
                     t.ScalarVal(lb.sse), t.ScalarVal(lb.rate));
        Fail(ErrorKind::kContract, "non-finite training loss");
      }
      loss_sum += lv;
      nll_sum += t.ScalarVal(lb.nll) / static_cast<double>(lb.n_coeffs);
      mse_sum += t.ScalarVal(lb.sse) / static_cast<double>(lb.n_pixels);
      bpp_sum += t.ScalarVal(lb.rate) / kLn2 /
                 static_cast<double>(lb.n_pixels);
      t.Backward(lb.loss);
    }
    for (const auto& p : m.params.items()) {
      if (!p->trainable) continue;
      for (double& g : p->grad.v) g /= ln_batch;
    }
    opt.Step(m.params);

    StepStats stats;
    stats.step = step + 1;
    stats.loss = loss_sum / ln_batch;
    stats.nll = nll_sum / ln_batch;
    stats.reg_mse = mse_sum / ln_batch;
    stats.bpp_est = bpp_sum / ln_batch;
    char row[160];
    std::snprintf(row, sizeof(row), "%d,%.8f,%.8f,%.8f,%.8f\n", stats.step,
                  stats.loss, stats.nll, stats.reg_mse, stats.bpp_est);
    csv << row;
    csv.flush();
    if (on_step) on_step(stats);

    if ((step + 1) % cfg.checkpoint_every == 0 ||
        step + 1 == cfg.total_steps) {
      CheckInvertibility(m, StreamKey(cfg.seed, 0xC4ECull + step));
      m.Save(cfg.out_model);
      SaveOptimizer(opt, cfg.out_model + ".opt");
    }
  }
}

}  // namespace pcomp
