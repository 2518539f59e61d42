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

#ifndef PCOMP_TRAIN_H_
#define PCOMP_TRAIN_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pcomp/model.h"
#include "pcomp/tape.h"
#include "pcomp/tensor.h"

namespace pcomp {

// Coefficient counts and pixel counts differ by orders of magnitude from the
// 0..255 pixel scale the squared-error term lives on, so the rate term
// carries this fixed balance factor in addition to the user-visible lambda.
// The per-coefficient and per-pixel normalizations below complete the
// weighting.
inline constexpr double kRateWeight = 1.0 / 256.0;

struct TrainConfig {
  double lambda = 8.0;
  int total_steps = 500;
  int warm_steps = 150;  // transform frozen at the classical wavelet
  int batch = 4;
  int patch = 64;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  uint64_t seed = 1;
  int checkpoint_every = 100;
  std::string data_dir;
  std::string out_model;
  std::string csv_path;  // defaults to out_model + ".csv"
  bool resume = false;
};

// Differentiable objective for one training patch:
//   loss = posterior NLL / n_coeffs
//        + pixel SSE of the posterior-mean reconstruction / n_pixels
//        + lambda * kRateWeight * context rate (nats) / n_coeffs
// Soft quantization adds deterministic unit-cell uniform noise keyed by
// (noise_seed, running index), so the objective is an exact function of its
// arguments and finite differences are valid.
struct LossBreakdown {
  Var loss;
  Var nll;
  Var sse;
  Var rate;  // nats, summed
  int64_t n_coeffs = 0;
  int64_t n_pixels = 0;
};

LossBreakdown BuildLoss(Tape& t, const Model& m, const Tensor& patch,
                        double lambda, uint64_t noise_seed);

// Per-step training record, also the CSV row layout.
struct StepStats {
  int step = 0;
  double loss = 0.0;
  double nll = 0.0;
  double reg_mse = 0.0;
  double bpp_est = 0.0;
};

// Runs (or resumes) the two-stage schedule on the PNG corpus in
// cfg.data_dir, checkpointing the model and optimizer state to
// cfg.out_model / cfg.out_model + ".opt" and appending per-step rows to the
// CSV. The optional callback observes every completed step.
void TrainModel(Model& m, const TrainConfig& cfg,
                const std::function<void(const StepStats&)>& on_step = {});

}  // namespace pcomp

#endif  // PCOMP_TRAIN_H_
