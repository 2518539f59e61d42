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

#ifndef PCOMP_GAUSSIAN_H_
#define PCOMP_GAUSSIAN_H_

#include <cmath>

// Scalar normal-distribution helpers shared by the differentiable rate loss
// and the coder-side probability evaluation.
namespace pcomp {

inline constexpr double kScaleMin = 1e-3;
inline constexpr double kProbFloor = 1.52587890625e-05;  // 2^-16
inline constexpr double kHalfLog2Pi = 0.9189385332046727;

// P(zlo < Z <= zhi) for a standard normal, evaluated without cancellation in
// the tails by switching between erf and erfc.
inline double NormalIntervalProb(double zlo, double zhi) {
  constexpr double kInvSqrt2 = 0.7071067811865476;
  if (zlo >= 0.0) return 0.5 * (std::erfc(zlo * kInvSqrt2) - std::erfc(zhi * kInvSqrt2));
  if (zhi <= 0.0) return 0.5 * (std::erfc(-zhi * kInvSqrt2) - std::erfc(-zlo * kInvSqrt2));
  return 0.5 * (std::erf(zhi * kInvSqrt2) - std::erf(zlo * kInvSqrt2));
}

struct LogIntervalResult {
  double logp;
  double dlo;  // d logp / d zlo
  double dhi;  // d logp / d zhi
};

namespace internal {

// Interval probabilities underflow to exactly zero in double precision once
// both edges pass ~38 sigma, which would freeze training on coefficients an
// untrained model mispredicts badly. Beyond kTailZ the computation moves to
// the log domain with a two-term Mills-ratio upper tail:
//   log Q(z) = -z^2/2 - log z - log sqrt(2 pi) + log(1 - 1/z^2 + 3/z^4).
inline constexpr double kTailZ = 30.0;
inline constexpr double kTinyProb = 1e-300;

inline double LogUpperTail(double z, double* dz) {
  const double z2 = z * z;
  const double corr = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2);
  if (dz != nullptr) {
    const double dcorr = 2.0 / (z2 * z) - 12.0 / (z2 * z2 * z);
    *dz = -z - 1.0 / z + dcorr / corr;
  }
  return -0.5 * z2 - std::log(z) - kHalfLog2Pi + std::log(corr);
}

inline LogIntervalResult LogIntervalRightTail(double zlo, double zhi) {
  double dqlo, dqhi;
  const double qlo = LogUpperTail(zlo, &dqlo);
  const double qhi = LogUpperTail(zhi, &dqhi);
  // log(e^qlo - e^qhi) = qlo + log(-expm1(qhi - qlo)).
  const double delta = qhi - qlo;
  const double one_minus = -std::expm1(delta);  // in (0, 1]
  LogIntervalResult r;
  r.logp = qlo + std::log(one_minus);
  r.dlo = dqlo / one_minus;
  r.dhi = -std::exp(delta) / one_minus * dqhi;
  return r;
}

}  // namespace internal

inline double NormalPdf(double z) {
  return std::exp(-0.5 * z * z - kHalfLog2Pi);
}

// log P(zlo < Z <= zhi) with live gradients in arbitrarily deep tails.
inline LogIntervalResult LogIntervalProb(double zlo, double zhi) {
  using internal::kTailZ;
  using internal::kTinyProb;
  if (zlo > kTailZ) return internal::LogIntervalRightTail(zlo, zhi);
  if (zhi < -kTailZ) {
    const LogIntervalResult m = internal::LogIntervalRightTail(-zhi, -zlo);
    return {m.logp, -m.dhi, -m.dlo};
  }
  const double p = NormalIntervalProb(zlo, zhi) + kTinyProb;
  return {std::log(p), -NormalPdf(zlo) / p, NormalPdf(zhi) / p};
}

struct MixtureParams {
  double w[3];
  double mu[3];
  double s[3];
};

// Maps a raw 9-vector (3 logits, 3 means, 3 pre-softplus scales) to mixture
// parameters: softmax weights, unconstrained means, softplus scales floored
// at kScaleMin.
inline MixtureParams MixtureFromRaw(const double* raw) {
  MixtureParams p;
  double mx = raw[0];
  for (int n = 1; n < 3; ++n) mx = std::max(mx, raw[n]);
  double z = 0.0;
  for (int n = 0; n < 3; ++n) {
    p.w[n] = std::exp(raw[n] - mx);
    z += p.w[n];
  }
  for (int n = 0; n < 3; ++n) p.w[n] /= z;
  for (int n = 0; n < 3; ++n) p.mu[n] = raw[3 + n];
  for (int n = 0; n < 3; ++n) {
    const double x = raw[6 + n];
    p.s[n] = (x > 30.0 ? x : std::log1p(std::exp(x))) + kScaleMin;
  }
  return p;
}

// Probability the mixture assigns to integer value v (mass of the unit cell
// (v-0.5, v+0.5]), floored at kProbFloor.
inline double CoeffProbability(double v, const MixtureParams& p) {
  double acc = 0.0;
  for (int n = 0; n < 3; ++n) {
    acc += p.w[n] *
           NormalIntervalProb((v - 0.5 - p.mu[n]) / p.s[n],
                              (v + 0.5 - p.mu[n]) / p.s[n]);
  }
  return std::max(acc, kProbFloor);
}

inline double CoeffProbabilityUnfloored(double v, const MixtureParams& p) {
  double acc = 0.0;
  for (int n = 0; n < 3; ++n) {
    acc += p.w[n] *
           NormalIntervalProb((v - 0.5 - p.mu[n]) / p.s[n],
                              (v + 0.5 - p.mu[n]) / p.s[n]);
  }
  return acc;
}

}  // namespace pcomp

#endif  // PCOMP_GAUSSIAN_H_
