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

#ifndef PCOMP_NN_H_
#define PCOMP_NN_H_

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "pcomp/tape.h"

namespace pcomp {

// Ordered collection of named parameters. Names are unique; layers hold raw
// pointers into the set, which stay stable because entries are heap-allocated
// and never removed.
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(ParamSet&&) = default;
  ParamSet& operator=(ParamSet&&) = default;

  Parameter* Create(const std::string& name, std::vector<int> shape);
  Parameter* Find(const std::string& name) const;
  Parameter* Require(const std::string& name) const;
  const std::vector<std::unique_ptr<Parameter>>& items() const {
    return items_;
  }
  size_t size() const { return items_.size(); }
  void ZeroGrads();
  int64_t TotalValues() const;

 private:
  std::vector<std::unique_ptr<Parameter>> items_;
  std::map<std::string, Parameter*> index_;
};

// Serialized parameter files: magic "PCMP", format version, parameter count,
// then for each parameter the name (u16 length + UTF-8 bytes), rank (u8),
// dims (u32 each) and the values as little-endian f64.
inline constexpr uint16_t kParamFileVersion = 1;
std::vector<uint8_t> SerializeParams(const ParamSet& params);
ParamSet DeserializeParams(const std::vector<uint8_t>& bytes);
void SaveParams(const std::string& path, const ParamSet& params);
ParamSet LoadParams(const std::string& path);

// Inputs to the small nets are pyramid coefficients on the 0..255 pixel
// scale; this brings them into the tanh-friendly unit range. Both the taped
// and the eager evaluation paths apply it, so the two stay bit-identical.
inline constexpr double kFeatureScale = 1.0 / 256.0;

// Deterministic fan-in uniform initializer: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
class InitRng {
 public:
  explicit InitRng(uint64_t seed) : gen_(seed) {}
  void FanInUniform(Parameter* p, int fan_in);
  void Zero(Parameter* p);

 private:
  std::mt19937_64 gen_;
};

struct Conv2dLayer {
  Parameter* w = nullptr;
  Parameter* b = nullptr;
  int cin = 0, cout = 0, k = 0;

  static Conv2dLayer Create(ParamSet& params, const std::string& prefix,
                            int cin, int cout, int k);
  static Conv2dLayer Attach(const ParamSet& params, const std::string& prefix,
                            int cin, int cout, int k);
  void Init(InitRng& rng, bool zero) const;
  Var Apply(Tape& t, Var x) const;
};

struct AffineLayer {
  Parameter* w = nullptr;
  Parameter* b = nullptr;
  int din = 0, dout = 0;

  static AffineLayer Create(ParamSet& params, const std::string& prefix,
                            int din, int dout);
  static AffineLayer Attach(const ParamSet& params, const std::string& prefix,
                            int din, int dout);
  void Init(InitRng& rng, bool zero) const;
  Var Apply(Tape& t, Var x) const;
};

// conv -> tanh -> conv -> tanh -> conv with a zero-initialized last layer, so
// the net is exactly zero at initialization.
struct ConvNet3 {
  Conv2dLayer c0, c1, c2;

  static ConvNet3 Create(ParamSet& params, const std::string& prefix, int cin,
                         int hidden, int cout, int k);
  static ConvNet3 Attach(const ParamSet& params, const std::string& prefix,
                         int cin, int hidden, int cout, int k);
  void Init(InitRng& rng) const;
  Var Apply(Tape& t, Var x) const;
  void SetTrainable(bool trainable) const;
};

// affine -> tanh -> affine -> tanh -> affine, zero-initialized last layer.
struct MlpHead {
  AffineLayer a0, a1, a2;

  static MlpHead Create(ParamSet& params, const std::string& prefix, int din,
                        int hidden, int dout);
  static MlpHead Attach(const ParamSet& params, const std::string& prefix,
                        int din, int hidden, int dout);
  void Init(InitRng& rng) const;
  Var Apply(Tape& t, Var x) const;
  // Tape-free forward over n rows of a0.din features each. Produces exactly
  // the same doubles as Apply on the same rows; the coder relies on that.
  void ApplyEager(const double* x, int n, double* out) const;
};

// Adam with bias correction. Moment tensors are keyed by parameter name so
// optimizer state can be checkpointed next to the model.
class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Applies one update from the accumulated gradients of all trainable
  // parameters, then zeroes every gradient.
  void Step(ParamSet& params);
  int64_t step_count() const { return step_; }

  ParamSet SerializeState() const;
  void RestoreState(const ParamSet& state);

 private:
  struct Moments {
    Tensor m, v;
  };
  double lr_, beta1_, beta2_, eps_;
  int64_t step_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace pcomp

#endif  // PCOMP_NN_H_
