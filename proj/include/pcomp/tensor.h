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

#ifndef PCOMP_TENSOR_H_
#define PCOMP_TENSOR_H_

#include <cstdint>
#include <vector>

#include "pcomp/base.h"

namespace pcomp {

// Dense row-major tensor of doubles. Rank is the number of entries in shape;
// scalars are rank-1 tensors of size 1.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;

  static Tensor Zeros(std::vector<int> s);
  static Tensor Full(std::vector<int> s, double value);
  static Tensor Scalar(double value) { return Full({1}, value); }

  int64_t Size() const { return static_cast<int64_t>(v.size()); }
  int Rank() const { return static_cast<int>(shape.size()); }
  bool SameShape(const Tensor& o) const { return shape == o.shape; }
  bool Empty() const { return v.empty(); }

  double* data() { return v.data(); }
  const double* data() const { return v.data(); }

  // 2-D accessors; the caller is responsible for rank.
  double& At(int r, int c) { return v[static_cast<size_t>(r) * shape[1] + c]; }
  double At(int r, int c) const {
    return v[static_cast<size_t>(r) * shape[1] + c];
  }

  bool AllFinite() const;
};

int64_t NumElements(const std::vector<int>& shape);
std::string ShapeToString(const std::vector<int>& shape);

}  // namespace pcomp

#endif  // PCOMP_TENSOR_H_
