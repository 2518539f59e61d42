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

#include "pcomp/nn.h"

#include <cmath>
#include <cstring>
#include <vector>

#include "pcomp/kernels.h"
#include "pcomp/util.h"

namespace pcomp {

namespace {
constexpr char kParamMagic[4] = {'P', 'C', 'M', 'P'};
}  // namespace

Parameter* ParamSet::Create(const std::string& name, std::vector<int> shape) {
  PCOMP_CHECK(index_.find(name) == index_.end(), ErrorKind::kContract,
              "duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor::Zeros(shape);
  p->grad = Tensor::Zeros(shape);
  Parameter* raw = p.get();
  items_.push_back(std::move(p));
  index_[name] = raw;
  return raw;
}

Parameter* ParamSet::Find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

Parameter* ParamSet::Require(const std::string& name) const {
  Parameter* p = Find(name);
  PCOMP_CHECK(p != nullptr, ErrorKind::kData, "missing parameter: " + name);
  return p;
}

void ParamSet::ZeroGrads() {
  for (auto& p : items_) p->ZeroGrad();
}

int64_t ParamSet::TotalValues() const {
  int64_t n = 0;
  for (const auto& p : items_) n += p->value.Size();
  return n;
}

std::vector<uint8_t> SerializeParams(const ParamSet& params) {
  ByteWriter w;
  w.Bytes(kParamMagic, 4);
  w.U16(kParamFileVersion);
  w.U32(static_cast<uint32_t>(params.size()));
  for (const auto& p : params.items()) {
    PCOMP_CHECK(p->name.size() <= 0xFFFF, ErrorKind::kContract,
                "parameter name too long");
    w.U16(static_cast<uint16_t>(p->name.size()));
    w.Str(p->name);
    w.U8(static_cast<uint8_t>(p->value.Rank()));
    for (int d : p->value.shape) w.U32(static_cast<uint32_t>(d));
    for (double x : p->value.v) w.F64(x);
  }
  return w.Take();
}

ParamSet DeserializeParams(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.Bytes(magic, 4);
  PCOMP_CHECK(std::memcmp(magic, kParamMagic, 4) == 0, ErrorKind::kData,
              "not a parameter file (bad magic)");
  const uint16_t version = r.U16();
  PCOMP_CHECK(version == kParamFileVersion, ErrorKind::kData,
              "unsupported parameter file version " + std::to_string(version));
  const uint32_t count = r.U32();
  ParamSet set;
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = r.U16();
    const std::string name = r.Str(name_len);
    PCOMP_CHECK(set.Find(name) == nullptr, ErrorKind::kData,
                "duplicate parameter in file: " + name);
    const uint8_t rank = r.U8();
    std::vector<int> shape(rank);
    for (int d = 0; d < rank; ++d) {
      const uint32_t dim = r.U32();
      PCOMP_CHECK(dim <= (1u << 24), ErrorKind::kData, "oversized dimension");
      shape[d] = static_cast<int>(dim);
    }
    Parameter* p = set.Create(name, shape);
    for (double& x : p->value.v) x = r.F64();
  }
  PCOMP_CHECK(r.Remaining() == 0, ErrorKind::kData,
              "trailing bytes in parameter file");
  return set;
}

void SaveParams(const std::string& path, const ParamSet& params) {
  const std::vector<uint8_t> bytes = SerializeParams(params);
  WriteFile(path, bytes.data(), bytes.size());
}

ParamSet LoadParams(const std::string& path) {
  return DeserializeParams(ReadFile(path));
}

void InitRng::FanInUniform(Parameter* p, int fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& x : p->value.v) {
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    x = bound * (2.0 * u - 1.0);
  }
}

void InitRng::Zero(Parameter* p) {
  for (double& x : p->value.v) x = 0.0;
}

Conv2dLayer Conv2dLayer::Create(ParamSet& params, const std::string& prefix,
                                int cin, int cout, int k) {
  Conv2dLayer l;
  l.cin = cin;
  l.cout = cout;
  l.k = k;
  l.w = params.Create(prefix + ".w", {cout, cin, k, k});
  l.b = params.Create(prefix + ".b", {cout});
  return l;
}

Conv2dLayer Conv2dLayer::Attach(const ParamSet& params,
                                const std::string& prefix, int cin, int cout,
                                int k) {
  Conv2dLayer l;
  l.cin = cin;
  l.cout = cout;
  l.k = k;
  l.w = params.Require(prefix + ".w");
  l.b = params.Require(prefix + ".b");
  const std::vector<int> ws{cout, cin, k, k};
  PCOMP_CHECK(l.w->value.shape == ws && l.b->value.shape == std::vector<int>{cout},
              ErrorKind::kData, "parameter shape mismatch at " + prefix);
  return l;
}

void Conv2dLayer::Init(InitRng& rng, bool zero) const {
  if (zero) {
    rng.Zero(w);
    rng.Zero(b);
  } else {
    rng.FanInUniform(w, cin * k * k);
    rng.FanInUniform(b, cin * k * k);
  }
}

Var Conv2dLayer::Apply(Tape& t, Var x) const {
  return t.Conv2d(x, t.Param(w), t.Param(b));
}

AffineLayer AffineLayer::Create(ParamSet& params, const std::string& prefix,
                                int din, int dout) {
  AffineLayer l;
  l.din = din;
  l.dout = dout;
  l.w = params.Create(prefix + ".w", {din, dout});
  l.b = params.Create(prefix + ".b", {dout});
  return l;
}

AffineLayer AffineLayer::Attach(const ParamSet& params,
                                const std::string& prefix, int din, int dout) {
  AffineLayer l;
  l.din = din;
  l.dout = dout;
  l.w = params.Require(prefix + ".w");
  l.b = params.Require(prefix + ".b");
  PCOMP_CHECK(l.w->value.shape == std::vector<int>({din, dout}) &&
                  l.b->value.shape == std::vector<int>{dout},
              ErrorKind::kData, "parameter shape mismatch at " + prefix);
  return l;
}

void AffineLayer::Init(InitRng& rng, bool zero) const {
  if (zero) {
    rng.Zero(w);
    rng.Zero(b);
  } else {
    rng.FanInUniform(w, din);
    rng.FanInUniform(b, din);
  }
}

Var AffineLayer::Apply(Tape& t, Var x) const {
  return t.Affine(x, t.Param(w), t.Param(b));
}

ConvNet3 ConvNet3::Create(ParamSet& params, const std::string& prefix, int cin,
                          int hidden, int cout, int k) {
  ConvNet3 n;
  n.c0 = Conv2dLayer::Create(params, prefix + ".conv0", cin, hidden, k);
  n.c1 = Conv2dLayer::Create(params, prefix + ".conv1", hidden, hidden, k);
  n.c2 = Conv2dLayer::Create(params, prefix + ".conv2", hidden, cout, k);
  return n;
}

ConvNet3 ConvNet3::Attach(const ParamSet& params, const std::string& prefix,
                          int cin, int hidden, int cout, int k) {
  ConvNet3 n;
  n.c0 = Conv2dLayer::Attach(params, prefix + ".conv0", cin, hidden, k);
  n.c1 = Conv2dLayer::Attach(params, prefix + ".conv1", hidden, hidden, k);
  n.c2 = Conv2dLayer::Attach(params, prefix + ".conv2", hidden, cout, k);
  return n;
}

void ConvNet3::Init(InitRng& rng) const {
  c0.Init(rng, false);
  c1.Init(rng, false);
  c2.Init(rng, true);
}

Var ConvNet3::Apply(Tape& t, Var x) const {
  // Copy the shape up front: growing the tape below can reallocate node
  // storage and invalidate references returned by Val.
  const std::vector<int> shape = t.Val(x).shape;
  const bool was_2d = shape.size() == 2;
  Var h = x;
  if (was_2d) h = t.Reshape(h, {1, shape[0], shape[1]});
  h = t.Scale(h, kFeatureScale);
  h = t.Tanh(c0.Apply(t, h));
  h = t.Tanh(c1.Apply(t, h));
  h = c2.Apply(t, h);
  if (was_2d && c2.cout == 1) {
    h = t.Reshape(h, {shape[0], shape[1]});
  }
  return h;
}

void ConvNet3::SetTrainable(bool trainable) const {
  for (const Conv2dLayer* l : {&c0, &c1, &c2}) {
    l->w->trainable = trainable;
    l->b->trainable = trainable;
  }
}

MlpHead MlpHead::Create(ParamSet& params, const std::string& prefix, int din,
                        int hidden, int dout) {
  MlpHead m;
  m.a0 = AffineLayer::Create(params, prefix + ".a0", din, hidden);
  m.a1 = AffineLayer::Create(params, prefix + ".a1", hidden, hidden);
  m.a2 = AffineLayer::Create(params, prefix + ".a2", hidden, dout);
  return m;
}

MlpHead MlpHead::Attach(const ParamSet& params, const std::string& prefix,
                        int din, int hidden, int dout) {
  MlpHead m;
  m.a0 = AffineLayer::Attach(params, prefix + ".a0", din, hidden);
  m.a1 = AffineLayer::Attach(params, prefix + ".a1", hidden, hidden);
  m.a2 = AffineLayer::Attach(params, prefix + ".a2", hidden, dout);
  return m;
}

void MlpHead::Init(InitRng& rng) const {
  a0.Init(rng, false);
  a1.Init(rng, false);
  a2.Init(rng, true);
}

Var MlpHead::Apply(Tape& t, Var x) const {
  Var h = t.Scale(x, kFeatureScale);
  h = t.Tanh(a0.Apply(t, h));
  h = t.Tanh(a1.Apply(t, h));
  return a2.Apply(t, h);
}

void MlpHead::ApplyEager(const double* x, int n, double* out) const {
  const int din = a0.din;
  const int hidden = a0.dout;
  std::vector<double> scaled(static_cast<size_t>(n) * din);
  for (size_t i = 0; i < scaled.size(); ++i) scaled[i] = x[i] * kFeatureScale;
  std::vector<double> h0(static_cast<size_t>(n) * hidden);
  std::vector<double> h1(static_cast<size_t>(n) * hidden);
  kernels::AffineForward(scaled.data(), n, din, a0.w->value.data(),
                         a0.b->value.data(), hidden, h0.data());
  kernels::TanhForward(h0.data(), static_cast<int64_t>(n) * hidden, h0.data());
  kernels::AffineForward(h0.data(), n, hidden, a1.w->value.data(),
                         a1.b->value.data(), hidden, h1.data());
  kernels::TanhForward(h1.data(), static_cast<int64_t>(n) * hidden, h1.data());
  kernels::AffineForward(h1.data(), n, hidden, a2.w->value.data(),
                         a2.b->value.data(), a2.dout, out);
}

void Adam::Step(ParamSet& params) {
  ++step_;
  const double corr1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double corr2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (const auto& p : params.items()) {
    if (!p->trainable) {
      p->ZeroGrad();
      continue;
    }
    Moments& mo = moments_[p->name];
    if (mo.m.Empty()) {
      mo.m = Tensor::Zeros(p->value.shape);
      mo.v = Tensor::Zeros(p->value.shape);
    }
    for (int64_t i = 0; i < p->value.Size(); ++i) {
      const double g = p->grad.v[i];
      mo.m.v[i] = beta1_ * mo.m.v[i] + (1.0 - beta1_) * g;
      mo.v.v[i] = beta2_ * mo.v.v[i] + (1.0 - beta2_) * g * g;
      const double mhat = mo.m.v[i] / corr1;
      const double vhat = mo.v.v[i] / corr2;
      p->value.v[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
    p->ZeroGrad();
  }
}

ParamSet Adam::SerializeState() const {
  ParamSet out;
  Parameter* meta = out.Create("adam.step", {1});
  meta->value.v[0] = static_cast<double>(step_);
  for (const auto& [name, mo] : moments_) {
    out.Create("adam.m." + name, mo.m.shape)->value = mo.m;
    out.Create("adam.v." + name, mo.v.shape)->value = mo.v;
  }
  return out;
}

void Adam::RestoreState(const ParamSet& state) {
  moments_.clear();
  step_ = 0;
  for (const auto& p : state.items()) {
    if (p->name == "adam.step") {
      step_ = static_cast<int64_t>(p->value.v[0]);
    } else if (p->name.rfind("adam.m.", 0) == 0) {
      moments_[p->name.substr(7)].m = p->value;
    } else if (p->name.rfind("adam.v.", 0) == 0) {
      moments_[p->name.substr(7)].v = p->value;
    } else {
      Fail(ErrorKind::kData, "unrecognized optimizer state entry: " + p->name);
    }
  }
}

}  // namespace pcomp
