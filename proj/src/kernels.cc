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

#include "pcomp/kernels.h"

#include <omp.h>

#include <cmath>
#include <cstring>
#include <vector>

namespace pcomp::kernels {

namespace {
bool g_parallel = true;

// Copies a {cin, h, w} stack into a {cin, h+2p, w+2p} symmetric-padded stack.
void PadSymmetric(const double* x, int cin, int h, int w, int p, double* xp) {
  const int hp = h + 2 * p;
  const int wp = w + 2 * p;
  for (int c = 0; c < cin; ++c) {
    const double* src = x + static_cast<int64_t>(c) * h * w;
    double* dst = xp + static_cast<int64_t>(c) * hp * wp;
    for (int y = 0; y < hp; ++y) {
      const double* row = src + static_cast<int64_t>(MirrorIndex(y - p, h)) * w;
      double* drow = dst + static_cast<int64_t>(y) * wp;
      for (int xx = 0; xx < wp; ++xx) {
        drow[xx] = row[MirrorIndex(xx - p, w)];
      }
    }
  }
}
}  // namespace

int MaxThreads() { return omp_get_max_threads(); }
void SetThreads(int n) {
  if (n > 0) omp_set_num_threads(n);
}
bool ParallelEnabled() { return g_parallel; }
void SetParallelEnabled(bool enabled) { g_parallel = enabled; }

void Conv2dForward(const double* x, int cin, int h, int w, const double* wts,
                   const double* bias, int cout, int k, double* out) {
  const int p = k / 2;
  const int hp = h + 2 * p;
  const int wp = w + 2 * p;
  std::vector<double> xp(static_cast<size_t>(cin) * hp * wp);
  PadSymmetric(x, cin, h, w, p, xp.data());

#pragma omp parallel for collapse(2) if (g_parallel)
  for (int co = 0; co < cout; ++co) {
    for (int y = 0; y < h; ++y) {
      double* orow = out + (static_cast<int64_t>(co) * h + y) * w;
      for (int xx = 0; xx < w; ++xx) orow[xx] = bias[co];
      for (int ci = 0; ci < cin; ++ci) {
        const double* plane = xp.data() + static_cast<int64_t>(ci) * hp * wp;
        for (int ky = 0; ky < k; ++ky) {
          const double* irow = plane + static_cast<int64_t>(y + ky) * wp;
          const double* wrow =
              wts + ((static_cast<int64_t>(co) * cin + ci) * k + ky) * k;
          for (int kx = 0; kx < k; ++kx) {
            const double wv = wrow[kx];
            const double* src = irow + kx;
            for (int xx = 0; xx < w; ++xx) orow[xx] += wv * src[xx];
          }
        }
      }
    }
  }
}

void Conv2dBackward(const double* x, int cin, int h, int w, const double* wts,
                    int cout, int k, const double* dout, double* dx, double* dw,
                    double* db) {
  const int p = k / 2;
  const int hp = h + 2 * p;
  const int wp = w + 2 * p;

  if (db != nullptr) {
#pragma omp parallel for if (g_parallel)
    for (int co = 0; co < cout; ++co) {
      const double* g = dout + static_cast<int64_t>(co) * h * w;
      double s = 0.0;
      for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i) s += g[i];
      db[co] = s;
    }
  }

  if (dw != nullptr) {
    std::vector<double> xp(static_cast<size_t>(cin) * hp * wp);
    PadSymmetric(x, cin, h, w, p, xp.data());
    // One (co, ci) weight block per iteration; the sum over the plane stays
    // inside the iteration so the result does not depend on the partition.
#pragma omp parallel for collapse(2) if (g_parallel)
    for (int co = 0; co < cout; ++co) {
      for (int ci = 0; ci < cin; ++ci) {
        const double* g = dout + static_cast<int64_t>(co) * h * w;
        const double* plane = xp.data() + static_cast<int64_t>(ci) * hp * wp;
        double* wblock =
            dw + (static_cast<int64_t>(co) * cin + ci) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            double s = 0.0;
            for (int y = 0; y < h; ++y) {
              const double* grow = g + static_cast<int64_t>(y) * w;
              const double* irow =
                  plane + static_cast<int64_t>(y + ky) * wp + kx;
              for (int xx = 0; xx < w; ++xx) s += grow[xx] * irow[xx];
            }
            wblock[static_cast<int64_t>(ky) * k + kx] = s;
          }
        }
      }
    }
  }

  if (dx != nullptr) {
    std::vector<double> dxp(static_cast<size_t>(cin) * hp * wp, 0.0);
    // Scatter into the padded gradient. Channels write disjoint planes; the
    // loops inside one channel overlap and stay serial.
#pragma omp parallel for if (g_parallel)
    for (int ci = 0; ci < cin; ++ci) {
      double* plane = dxp.data() + static_cast<int64_t>(ci) * hp * wp;
      for (int co = 0; co < cout; ++co) {
        const double* g = dout + static_cast<int64_t>(co) * h * w;
        for (int ky = 0; ky < k; ++ky) {
          const double* wrow =
              wts + ((static_cast<int64_t>(co) * cin + ci) * k + ky) * k;
          for (int kx = 0; kx < k; ++kx) {
            const double wv = wrow[kx];
            for (int y = 0; y < h; ++y) {
              double* drow = plane + static_cast<int64_t>(y + ky) * wp + kx;
              const double* grow = g + static_cast<int64_t>(y) * w;
              for (int xx = 0; xx < w; ++xx) drow[xx] += wv * grow[xx];
            }
          }
        }
      }
      // Fold the padded border back through the mirror (adjoint of
      // PadSymmetric), then copy the interior.
      double* dst = dx + static_cast<int64_t>(ci) * h * w;
      std::memset(dst, 0, sizeof(double) * h * w);
      for (int y = 0; y < hp; ++y) {
        const int sy = MirrorIndex(y - p, h);
        for (int xx = 0; xx < wp; ++xx) {
          dst[static_cast<int64_t>(sy) * w + MirrorIndex(xx - p, w)] +=
              plane[static_cast<int64_t>(y) * wp + xx];
        }
      }
    }
  }
}

void AffineForward(const double* x, int n, int din, const double* w,
                   const double* b, int dout, double* out) {
#pragma omp parallel for if (g_parallel && n > 1)
  for (int i = 0; i < n; ++i) {
    const double* xrow = x + static_cast<int64_t>(i) * din;
    double* orow = out + static_cast<int64_t>(i) * dout;
    std::memcpy(orow, b, sizeof(double) * dout);
    for (int d = 0; d < din; ++d) {
      const double xv = xrow[d];
      const double* wrow = w + static_cast<int64_t>(d) * dout;
      for (int j = 0; j < dout; ++j) orow[j] += xv * wrow[j];
    }
  }
}

void AffineBackward(const double* x, int n, int din, const double* w, int dout,
                    const double* dout_grad, double* dx, double* dw,
                    double* db) {
  if (dx != nullptr) {
#pragma omp parallel for if (g_parallel && n > 1)
    for (int i = 0; i < n; ++i) {
      const double* grow = dout_grad + static_cast<int64_t>(i) * dout;
      double* drow = dx + static_cast<int64_t>(i) * din;
      for (int d = 0; d < din; ++d) {
        const double* wrow = w + static_cast<int64_t>(d) * dout;
        double s = 0.0;
        for (int j = 0; j < dout; ++j) s += grow[j] * wrow[j];
        drow[d] = s;
      }
    }
  }
  if (dw != nullptr) {
    // One input dimension per iteration; the sum over rows stays serial.
#pragma omp parallel for if (g_parallel && din > 1)
    for (int d = 0; d < din; ++d) {
      double* wrow = dw + static_cast<int64_t>(d) * dout;
      std::memset(wrow, 0, sizeof(double) * dout);
      for (int i = 0; i < n; ++i) {
        const double xv = x[static_cast<int64_t>(i) * din + d];
        const double* grow = dout_grad + static_cast<int64_t>(i) * dout;
        for (int j = 0; j < dout; ++j) wrow[j] += xv * grow[j];
      }
    }
  }
  if (db != nullptr) {
    std::memset(db, 0, sizeof(double) * dout);
    for (int i = 0; i < n; ++i) {
      const double* grow = dout_grad + static_cast<int64_t>(i) * dout;
      for (int j = 0; j < dout; ++j) db[j] += grow[j];
    }
  }
}

void TanhForward(const double* x, int64_t n, double* out) {
#pragma omp parallel for if (g_parallel && n > 4096)
  for (int64_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}

void TanhBackward(const double* y, const double* g, int64_t n, double* dx) {
#pragma omp parallel for if (g_parallel && n > 4096)
  for (int64_t i = 0; i < n; ++i) dx[i] = g[i] * (1.0 - y[i] * y[i]);
}

void SoftplusForward(const double* x, int64_t n, double* out) {
#pragma omp parallel for if (g_parallel && n > 4096)
  for (int64_t i = 0; i < n; ++i) {
    const double v = x[i];
    out[i] = v > 30.0 ? v : std::log1p(std::exp(v));
  }
}

void SoftplusBackward(const double* x, const double* g, int64_t n, double* dx) {
#pragma omp parallel for if (g_parallel && n > 4096)
  for (int64_t i = 0; i < n; ++i) {
    const double v = x[i];
    const double sig = v > 30.0 ? 1.0 : 1.0 / (1.0 + std::exp(-v));
    dx[i] = g[i] * sig;
  }
}

void Axpy(const double* a, double c, const double* b, int64_t n, double* out) {
#pragma omp parallel for if (g_parallel && n > 4096)
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] + c * b[i];
}

void Accumulate(double* acc, const double* g, int64_t n) {
#pragma omp parallel for if (g_parallel && n > 4096)
  for (int64_t i = 0; i < n; ++i) acc[i] += g[i];
}

void AccumulateScaled(double* acc, double c, const double* g, int64_t n) {
#pragma omp parallel for if (g_parallel && n > 4096)
  for (int64_t i = 0; i < n; ++i) acc[i] += c * g[i];
}

void PairSumNextRows(const double* a, int h, int w, double* out) {
#pragma omp parallel for if (g_parallel && h > 8)
  for (int r = 0; r < h; ++r) {
    const double* cur = a + static_cast<int64_t>(r) * w;
    const double* nxt = a + static_cast<int64_t>(r + 1 < h ? r + 1 : h - 1) * w;
    double* orow = out + static_cast<int64_t>(r) * w;
    for (int c = 0; c < w; ++c) orow[c] = cur[c] + nxt[c];
  }
}

void PairSumPrevRows(const double* a, int h, int w, double* out) {
#pragma omp parallel for if (g_parallel && h > 8)
  for (int r = 0; r < h; ++r) {
    const double* cur = a + static_cast<int64_t>(r) * w;
    const double* prv = a + static_cast<int64_t>(r > 0 ? r - 1 : 0) * w;
    double* orow = out + static_cast<int64_t>(r) * w;
    for (int c = 0; c < w; ++c) orow[c] = prv[c] + cur[c];
  }
}

void PairSumNextRowsBackward(const double* g, int h, int w, double* da) {
  // da[r] = g[r] + g[r-1], plus the clamped last row feeding itself twice.
  // Columns are independent; rows collide, so the scatter runs per column.
#pragma omp parallel for if (g_parallel && w > 8)
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) {
      double s = g[static_cast<int64_t>(r) * w + c];
      if (r > 0) s += g[static_cast<int64_t>(r - 1) * w + c];
      if (r == h - 1) s += g[static_cast<int64_t>(r) * w + c];
      da[static_cast<int64_t>(r) * w + c] = s;
    }
  }
}

void PairSumPrevRowsBackward(const double* g, int h, int w, double* da) {
#pragma omp parallel for if (g_parallel && w > 8)
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) {
      double s = g[static_cast<int64_t>(r) * w + c];
      if (r + 1 < h) s += g[static_cast<int64_t>(r + 1) * w + c];
      if (r == 0) s += g[c];
      da[static_cast<int64_t>(r) * w + c] = s;
    }
  }
}

void Transpose2d(const double* a, int h, int w, double* out) {
#pragma omp parallel for if (g_parallel && h > 8)
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      out[static_cast<int64_t>(c) * h + r] = a[static_cast<int64_t>(r) * w + c];
    }
  }
}

void GatherForward(const double* plane, const int32_t* idx, int64_t n, int m,
                   double* out) {
#pragma omp parallel for if (g_parallel && n > 64)
  for (int64_t i = 0; i < n; ++i) {
    const int32_t* irow = idx + i * m;
    double* orow = out + i * m;
    for (int j = 0; j < m; ++j) {
      orow[j] = irow[j] < 0 ? 0.0 : plane[irow[j]];
    }
  }
}

void GatherBackward(const double* g, const int32_t* idx, int64_t n, int m,
                    double* dplane) {
  // Serial: multiple gather entries may point at the same plane cell.
  for (int64_t i = 0; i < n; ++i) {
    const int32_t* irow = idx + i * m;
    const double* grow = g + i * m;
    for (int j = 0; j < m; ++j) {
      if (irow[j] >= 0) dplane[irow[j]] += grow[j];
    }
  }
}

double SumAll(const double* a, int64_t n) {
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += a[i];
  return s;
}

}  // namespace pcomp::kernels
