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

#ifndef PCOMP_MODEL_H_
#define PCOMP_MODEL_H_

#include <array>
#include <cstdint>
#include <string>

#include "pcomp/context.h"
#include "pcomp/lifting.h"
#include "pcomp/nn.h"
#include "pcomp/posterior.h"

namespace pcomp {

// The complete parameter bundle: the shared lifting stage, the per-subband
// posterior nets, and the context mixture heads, plus architecture metadata
// stored as (non-trainable) parameters so a saved file is self-describing.
struct Model {
  int levels = 0;
  int context_window = 0;
  ParamSet params;
  LiftingStage lift;
  PosteriorModel posterior;
  ContextModel context;

  Model() = default;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  static Model Create(int levels, int context_window, uint64_t init_seed);
  static Model Load(const std::string& path);
  void Save(const std::string& path) const;

  // 16-byte digest of the serialized parameters; what containers carry to
  // pair a bitstream with the exact model that wrote it.
  std::array<uint8_t, 16> Fingerprint() const;
};

}  // namespace pcomp

#endif  // PCOMP_MODEL_H_
