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

#include "pcomp/posterior.h"

#include <string>

#include "pcomp/base.h"
#include "pcomp/gaussian.h"

namespace pcomp {

namespace {

constexpr int kHiddenChannels = 32;

std::string NetName(const BandId& id) {
  return std::string("post.") + OrientationName(id.orientation) +
         std::to_string(id.level);
}

int InputChannels(const BandId& id) {
  return id.orientation == Orientation::kLL ? 1 : 2;
}

}  // namespace

PosteriorModel PosteriorModel::Create(ParamSet& params, int levels) {
  PosteriorModel m;
  m.levels = levels;
  for (const BandId& id : BandOrder(levels)) {
    m.nets.push_back(ConvNet3::Create(params, NetName(id), InputChannels(id),
                                      kHiddenChannels, 2, 3));
  }
  return m;
}

PosteriorModel PosteriorModel::Attach(const ParamSet& params, int levels) {
  PosteriorModel m;
  m.levels = levels;
  for (const BandId& id : BandOrder(levels)) {
    m.nets.push_back(ConvNet3::Attach(params, NetName(id), InputChannels(id),
                                      kHiddenChannels, 2, 3));
  }
  return m;
}

void PosteriorModel::Init(InitRng& rng) const {
  for (const ConvNet3& net : nets) net.Init(rng);
}

BandPosterior PosteriorModel::Apply(Tape& t, Var band, std::optional<Var> ref,
                                    const BandId& id) const {
  const bool is_ll = id.orientation == Orientation::kLL;
  PCOMP_CHECK(is_ll == !ref.has_value(), ErrorKind::kContract,
              "reference plane must accompany detail subbands only");
  Var input = is_ll ? band : t.StackChannels(band, *ref);
  Var raw = nets[BandSlot(levels, id)].Apply(t, input);
  BandPosterior p;
  p.mu = t.Add(band, t.Scale(t.Tanh(t.TakeChannel(raw, 0)), 0.5));
  p.s = t.AddScalar(t.Softplus(t.TakeChannel(raw, 1)), kScaleMin);
  return p;
}

void PosteriorModel::ApplyEager(const Tensor& band, const Tensor* ref,
                                const BandId& id, Tensor* mu,
                                Tensor* s) const {
  Tape t;
  Var b = t.Input(band);
  std::optional<Var> r;
  if (ref != nullptr) r = t.Input(*ref);
  BandPosterior p = Apply(t, b, r, id);
  *mu = t.Val(p.mu);
  *s = t.Val(p.s);
}

}  // namespace pcomp
