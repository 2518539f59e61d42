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
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "pcomp/base.h"
#include "pcomp/image.h"
#include "pcomp/ingest.h"
#include "pcomp/model.h"
#include "pcomp/tape.h"
#include "pcomp/train.h"
#include "pcomp/util.h"
#include "test_util.h"

namespace pcomp {
namespace {

Tensor PixelPatch(int side) {
  Tensor t = Tensor::Zeros({side, side});
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      t.v[static_cast<size_t>(r) * side + c] =
          std::floor(128.0 + 90.0 * std::sin(0.31 * r) * std::cos(0.23 * c) +
                     20.0 * std::sin(0.9 * (r + 2 * c)));
    }
  }
  return t;
}

template <typename Fn>
void CheckErrorKind(ErrorKind kind, Fn fn) {
  try {
    fn();
    FAIL_CHECK("expected an Error");
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

std::vector<std::string> CsvLines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

TEST_CASE("loss terms combine with the documented weights") {
  Model m = Model::Create(2, 5, 7);
  const Tensor patch = PixelPatch(16);
  Tape t;
  const LossBreakdown lb = BuildLoss(t, m, patch, 8.0, 555);
  CHECK(lb.n_coeffs == 256);
  CHECK(lb.n_pixels == 256);
  const double loss = t.ScalarVal(lb.loss);
  const double nll = t.ScalarVal(lb.nll);
  const double sse = t.ScalarVal(lb.sse);
  const double rate = t.ScalarVal(lb.rate);
  CHECK(std::isfinite(loss));
  CHECK(nll >= 0.0);
  CHECK(sse >= 0.0);
  CHECK(rate > 0.0);
  const double expect =
      nll / 256.0 + sse / 256.0 + 8.0 * kRateWeight * rate / 256.0;
  CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("loss is a deterministic function of its arguments") {
  Model m = Model::Create(2, 5, 7);
  const Tensor patch = PixelPatch(16);
  auto eval = [&](uint64_t noise_seed) {
    Tape t;
    return t.ScalarVal(BuildLoss(t, m, patch, 8.0, noise_seed).loss);
  };
  CHECK(eval(42) == eval(42));
  CHECK(eval(42) != eval(43));
}

TEST_CASE("lambda reweights only the rate term") {
  Model m = Model::Create(2, 5, 7);
  const Tensor patch = PixelPatch(16);
  Tape t4, t16;
  const LossBreakdown a = BuildLoss(t4, m, patch, 4.0, 9);
  const LossBreakdown b = BuildLoss(t16, m, patch, 16.0, 9);
  CHECK(t4.ScalarVal(a.nll) == doctest::Approx(t16.ScalarVal(b.nll)));
  CHECK(t4.ScalarVal(a.sse) == doctest::Approx(t16.ScalarVal(b.sse)));
  const double rate = t4.ScalarVal(a.rate);
  CHECK(rate == doctest::Approx(t16.ScalarVal(b.rate)).epsilon(1e-12));
  const double gap = t16.ScalarVal(b.loss) - t4.ScalarVal(a.loss);
  CHECK(gap ==
        doctest::Approx(12.0 * kRateWeight * rate / 256.0).epsilon(1e-9));
}

TEST_CASE("loss gradients match finite differences") {
  Model m = Model::Create(1, 3, 11);
  test::RandomizeParams(m.params, 77, 0.2);
  const Tensor patch = PixelPatch(8);
  std::vector<Parameter*> probed;
  for (const auto& p : m.params.items()) {
    if (p->trainable) probed.push_back(p.get());
  }
  REQUIRE(!probed.empty());
  auto build = [&](Tape& t) {
    return BuildLoss(t, m, patch, 8.0, 321).loss;
  };
  const double err = test::MaxGradError(build, probed, 1e-5, 701);
  CHECK(err < 1e-3);
}

TEST_CASE("training checkpoints, logs, and resumes") {
  test::TempDir tmp("train");
  const std::string data = tmp.Sub("data");
  std::filesystem::create_directories(data);
  for (int i = 0; i < 3; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "/img_%d.png", i);
    SavePng(data + name, SyntheticImage(11, i, 96));
  }

  Model m = Model::Create(2, 5, 3);
  TrainConfig cfg;
  cfg.lambda = 8.0;
  cfg.total_steps = 6;
  cfg.warm_steps = 3;
  cfg.batch = 2;
  cfg.patch = 32;
  cfg.lr = 1e-3;
  cfg.seed = 2;
  cfg.checkpoint_every = 3;
  cfg.data_dir = data;
  cfg.out_model = tmp.Sub("m.pcmp");

  std::vector<StepStats> stats;
  TrainModel(m, cfg, [&](const StepStats& s) { stats.push_back(s); });
  REQUIRE(static_cast<int>(stats.size()) == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(stats[i].step == i + 1);
    CHECK(std::isfinite(stats[i].loss));
    CHECK(stats[i].bpp_est > 0.0);
  }

  const auto lines = CsvLines(cfg.out_model + ".csv");
  REQUIRE(lines.size() == 7);
  CHECK(lines[0] == "step,loss,nll,reg_mse,bpp_est");
  CHECK(lines[1].rfind("1,", 0) == 0);
  CHECK(lines[6].rfind("6,", 0) == 0);

  CHECK(std::filesystem::exists(cfg.out_model));
  CHECK(std::filesystem::exists(cfg.out_model + ".opt"));
  Model loaded = Model::Load(cfg.out_model);
  CHECK(loaded.levels == 2);
  CHECK(loaded.context_window == 5);
  CHECK(loaded.Fingerprint() == m.Fingerprint());
  CHECK(loaded.Fingerprint() != Model::Create(2, 5, 3).Fingerprint());

  // Resume from the checkpoint and extend to 8 steps.
  Model m2 = Model::Load(cfg.out_model);
  TrainConfig more = cfg;
  more.total_steps = 8;
  more.resume = true;
  std::vector<StepStats> tail;
  TrainModel(m2, more, [&](const StepStats& s) { tail.push_back(s); });
  REQUIRE(static_cast<int>(tail.size()) == 2);
  CHECK(tail[0].step == 7);
  CHECK(tail[1].step == 8);
  const auto all = CsvLines(cfg.out_model + ".csv");
  CHECK(all.size() == 9);
  CHECK(all[7].rfind("7,", 0) == 0);

  // A resume target behind the checkpointed step count is a usage error.
  Model m3 = Model::Load(cfg.out_model);
  TrainConfig past = cfg;
  past.total_steps = 4;
  past.resume = true;
  CheckErrorKind(ErrorKind::kUsage, [&] { TrainModel(m3, past); });
}

TEST_CASE("warm phase keeps the transform at its starting point") {
  test::TempDir tmp("train");
  const std::string data = tmp.Sub("data");
  std::filesystem::create_directories(data);
  SavePng(data + "/img.png", SyntheticImage(4, 0, 64));

  Model m = Model::Create(2, 5, 3);
  const Model fresh = Model::Create(2, 5, 3);
  TrainConfig cfg;
  cfg.total_steps = 2;
  cfg.warm_steps = 2;
  cfg.batch = 1;
  cfg.patch = 16;
  cfg.lr = 1e-3;
  cfg.checkpoint_every = 100;
  cfg.data_dir = data;
  cfg.out_model = tmp.Sub("warm.pcmp");
  TrainModel(m, cfg);

  bool posterior_moved = false;
  for (const auto& p : fresh.params.items()) {
    const Parameter* after = m.params.Require(p->name);
    if (p->name.rfind("lift.", 0) == 0) {
      CHECK(after->value.v == p->value.v);
    } else if (p->name.rfind("post.", 0) == 0 &&
               after->value.v != p->value.v) {
      posterior_moved = true;
    }
  }
  CHECK(posterior_moved);
}

TEST_CASE("training rejects bad configurations") {
  test::TempDir tmp("train");
  const std::string empty_dir = tmp.Sub("empty");
  std::filesystem::create_directories(empty_dir);
  const std::string small_dir = tmp.Sub("small");
  std::filesystem::create_directories(small_dir);
  SavePng(small_dir + "/tiny.png", SyntheticImage(1, 0, 16));

  Model m = Model::Create(2, 5, 3);
  TrainConfig cfg;
  cfg.total_steps = 1;
  cfg.warm_steps = 0;
  cfg.batch = 1;
  cfg.patch = 32;
  cfg.data_dir = empty_dir;
  cfg.out_model = tmp.Sub("out.pcmp");

  TrainConfig bad = cfg;
  bad.patch = 18;  // not a multiple of 2^levels
  CheckErrorKind(ErrorKind::kUsage, [&] { TrainModel(m, bad); });
  bad = cfg;
  bad.patch = 2;  // below 2^levels
  CheckErrorKind(ErrorKind::kUsage, [&] { TrainModel(m, bad); });
  bad = cfg;
  bad.batch = 0;
  CheckErrorKind(ErrorKind::kUsage, [&] { TrainModel(m, bad); });
  bad = cfg;
  bad.out_model.clear();
  CheckErrorKind(ErrorKind::kUsage, [&] { TrainModel(m, bad); });

  // No images at all, and images smaller than the patch, are data errors.
  CheckErrorKind(ErrorKind::kData, [&] { TrainModel(m, cfg); });
  bad = cfg;
  bad.data_dir = small_dir;
  CheckErrorKind(ErrorKind::kData, [&] { TrainModel(m, bad); });
}

}  // namespace
}  // namespace pcomp
