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

// Times the serial reference path against the OpenMP path for the heavy
// kernels and checks that both produce identical bits.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "pcomp/kernels.h"
#include "pcomp/lifting.h"
#include "pcomp/nn.h"
#include "pcomp/rng.h"
#include "pcomp/tensor.h"

using namespace pcomp;

namespace {

std::vector<double> RandomVec(int64_t n, uint64_t key) {
  std::vector<double> v(n);
  for (int64_t i = 0; i < n; ++i) {
    v[i] = 2.0 * UniformFromKey(StreamKey(key, i)) - 1.0;
  }
  return v;
}

double TimeMs(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() /
         reps;
}

bool SameBits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

struct Case {
  const char* name;
  std::function<void(std::vector<double>*)> run;  // fills the output
  int reps;
};

}  // namespace

int main() {
  const int threads = kernels::MaxThreads();
  std::printf("kernel benchmark: %d OpenMP thread(s) available\n\n", threads);

  const int h = 256, w = 256, cin = 16, cout = 16, k = 3;
  const std::vector<double> x = RandomVec(int64_t{cin} * h * w, 1);
  const std::vector<double> wts =
      RandomVec(int64_t{cout} * cin * k * k, 2);
  const std::vector<double> bias = RandomVec(cout, 3);
  const std::vector<double> dout = RandomVec(int64_t{cout} * h * w, 4);

  const int an = 4096, adin = 38, adout = 64;
  const std::vector<double> ax = RandomVec(int64_t{an} * adin, 5);
  const std::vector<double> aw = RandomVec(int64_t{adin} * adout, 6);
  const std::vector<double> ab = RandomVec(adout, 7);

  ParamSet params;
  const LiftingStage lift = LiftingStage::Create(params, "lift");
  InitRng init(99);
  lift.Init(init);
  Tensor plane = Tensor::Zeros({256, 256});
  for (int64_t i = 0; i < plane.Size(); ++i) {
    plane.v[i] = 255.0 * UniformFromKey(StreamKey(8, i));
  }

  std::vector<Case> cases;
  cases.push_back(
      {"conv2d forward 16x256x256 -> 16", [&](std::vector<double>* out) {
         out->assign(int64_t{cout} * h * w, 0.0);
         kernels::Conv2dForward(x.data(), cin, h, w, wts.data(), bias.data(),
                                cout, k, out->data());
       },
       3});
  cases.push_back(
      {"conv2d backward (dx+dw+db)", [&](std::vector<double>* out) {
         out->assign(int64_t{cin} * h * w + wts.size() + cout, 0.0);
         double* dx = out->data();
         double* dw = dx + int64_t{cin} * h * w;
         double* db = dw + wts.size();
         kernels::Conv2dBackward(x.data(), cin, h, w, wts.data(), cout, k,
                                 dout.data(), dx, dw, db);
       },
       3});
  cases.push_back(
      {"affine forward 4096x38 -> 64", [&](std::vector<double>* out) {
         out->assign(int64_t{an} * adout, 0.0);
         kernels::AffineForward(ax.data(), an, adin, aw.data(), ab.data(),
                                adout, out->data());
       },
       10});
  cases.push_back(
      {"forward transform 256x256, 4 levels", [&](std::vector<double>* out) {
         const Pyramid p = ForwardTransformEager(lift, plane, 4);
         out->clear();
         for (const Tensor& band : p.bands) {
           out->insert(out->end(), band.v.begin(), band.v.end());
         }
       },
       3});

  std::printf("%-38s %12s %12s %9s %s\n", "kernel", "serial ms", "openmp ms",
              "speedup", "bits");
  for (const Case& c : cases) {
    std::vector<double> serial_out, parallel_out;
    kernels::SetParallelEnabled(false);
    const double serial_ms = TimeMs([&] { c.run(&serial_out); }, c.reps);
    kernels::SetParallelEnabled(true);
    const double parallel_ms = TimeMs([&] { c.run(&parallel_out); }, c.reps);
    const bool same = SameBits(serial_out, parallel_out);
    std::printf("%-38s %12.3f %12.3f %8.2fx %s\n", c.name, serial_ms,
                parallel_ms, serial_ms / parallel_ms,
                same ? "identical" : "DIFFER");
    if (!same) return 1;
  }
  return 0;
}
