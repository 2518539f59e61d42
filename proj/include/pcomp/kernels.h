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

#ifndef PCOMP_KERNELS_H_
#define PCOMP_KERNELS_H_

#include <cstdint>

// Low-level numeric kernels. Every kernel comes in one implementation that is
// parallelized with OpenMP when `parallel` is true and runs serially
// otherwise. Parallel partitions own disjoint outputs and never split a
// single output's accumulation, so results are bit-identical for any thread
// count. Sums that would need a floating-point reduction across threads
// (weight gradients, scatter-adds) are kept serial per output on purpose.
namespace pcomp::kernels {

// Number of OpenMP threads currently configured.
int MaxThreads();
// Overrides the OpenMP thread count (used by the CLI for PCOMP_THREADS).
void SetThreads(int n);

// Whether kernels parallelize by default. Tests flip this to compare the
// serial and parallel paths.
bool ParallelEnabled();
void SetParallelEnabled(bool enabled);

// Mirrored index for symmetric extension: -1 -> 0, n -> n-1. Valid for any i
// in [-n, 2n-1].
inline int MirrorIndex(int i, int n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - 1 - i;
  return i;
}

// 2-D convolution over a {cin, h, w} plane stack with odd kernel size k,
// symmetric boundary extension and per-output-channel bias.
// x: cin*h*w, wts: cout*cin*k*k, bias: cout, out: cout*h*w.
void Conv2dForward(const double* x, int cin, int h, int w, const double* wts,
                   const double* bias, int cout, int k, double* out);

// Gradients of Conv2dForward. Any of dx/dw/db may be null to skip it. dx, dw
// and db are overwritten, not accumulated.
void Conv2dBackward(const double* x, int cin, int h, int w, const double* wts,
                    int cout, int k, const double* dout, double* dx, double* dw,
                    double* db);

// out[n] = b + x[n] * w for row-major x {n, din}, w {din, dout}, b {dout}.
void AffineForward(const double* x, int n, int din, const double* w,
                   const double* b, int dout, double* out);
void AffineBackward(const double* x, int n, int din, const double* w, int dout,
                    const double* dout_grad, double* dx, double* dw,
                    double* db);

// Elementwise maps and their input gradients (dx overwritten).
void TanhForward(const double* x, int64_t n, double* out);
void TanhBackward(const double* y /* tanh(x) */, const double* g, int64_t n,
                  double* dx);
void SoftplusForward(const double* x, int64_t n, double* out);
void SoftplusBackward(const double* x, const double* g, int64_t n, double* dx);

// out = a + c * b over n elements.
void Axpy(const double* a, double c, const double* b, int64_t n, double* out);
// acc += g over n elements (gradient accumulation).
void Accumulate(double* acc, const double* g, int64_t n);
// acc += c * g over n elements.
void AccumulateScaled(double* acc, double c, const double* g, int64_t n);

// Pair sums along rows of a {h, w} plane with mirror clamping at the ends.
// Next: out[r] = a[r] + a[min(r+1, h-1)]. Prev: out[r] = a[max(r-1, 0)] + a[r].
void PairSumNextRows(const double* a, int h, int w, double* out);
void PairSumPrevRows(const double* a, int h, int w, double* out);
void PairSumNextRowsBackward(const double* g, int h, int w, double* da);
void PairSumPrevRowsBackward(const double* g, int h, int w, double* da);

void Transpose2d(const double* a, int h, int w, double* out);

// Gather rows of features out[i] = plane[idx[i*m + j]] with idx -1 mapping to
// 0.0. Backward scatter-adds into dplane (which must be pre-zeroed by the
// caller when overwrite semantics are wanted); it is serial because targets
// collide.
void GatherForward(const double* plane, const int32_t* idx, int64_t n, int m,
                   double* out);
void GatherBackward(const double* g, const int32_t* idx, int64_t n, int m,
                    double* dplane);

double SumAll(const double* a, int64_t n);

}  // namespace pcomp::kernels

#endif  // PCOMP_KERNELS_H_
