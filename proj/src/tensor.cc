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

#include "pcomp/tensor.h"

#include <cmath>
#include <string>

namespace pcomp {

int64_t NumElements(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    PCOMP_CHECK(d >= 0, ErrorKind::kInvalidShape, "negative dimension");
    n *= d;
  }
  return n;
}

std::string ShapeToString(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor Tensor::Zeros(std::vector<int> s) {
  Tensor t;
  int64_t n = NumElements(s);
  t.shape = std::move(s);
  t.v.assign(static_cast<size_t>(n), 0.0);
  return t;
}

Tensor Tensor::Full(std::vector<int> s, double value) {
  Tensor t = Zeros(std::move(s));
  for (double& x : t.v) x = value;
  return t;
}

bool Tensor::AllFinite() const {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace pcomp
