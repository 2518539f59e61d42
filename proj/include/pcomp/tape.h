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

#ifndef PCOMP_TAPE_H_
#define PCOMP_TAPE_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "pcomp/base.h"
#include "pcomp/tensor.h"

namespace pcomp {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  void ZeroGrad() {
    for (double& g : grad.v) g = 0.0;
  }
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Eager reverse-mode tape. Every op records its result immediately; Backward
// walks the tape in reverse and accumulates gradients into the Parameter
// objects bound by Param(). Ops on one tape are single-threaded; parallelism
// lives inside the kernels each op calls. Non-trainable parameters enter the
// graph as constants, so whole subgraphs that cannot influence any trainable
// parameter are skipped during the backward sweep.
class Tape {
 public:
  Var Input(Tensor value);
  Var Param(Parameter* p);

  const Tensor& Val(Var v) const;
  double ScalarVal(Var v) const;
  bool Requires(Var v) const;
  size_t NodeCount() const { return nodes_.size(); }

  // Runs reverse accumulation from a scalar loss. May be called once per tape.
  void Backward(Var loss);

  // Elementwise, same shape.
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  Var Axpy(Var a, double c, Var b);  // a + c*b
  Var Scale(Var a, double c);
  Var AddScalar(Var a, double c);
  Var Tanh(Var a);
  Var Softplus(Var a);
  Var Square(Var a);

  Var Sum(Var a);  // -> scalar

  // x {cin,h,w}, w {cout,cin,k,k} with odd k, b {cout} -> {cout,h,w}.
  // Symmetric boundary extension.
  Var Conv2d(Var x, Var w, Var b);
  // x {n,din}, w {din,dout}, b {dout} -> {n,dout}.
  Var Affine(Var x, Var w, Var b);

  // Row split / merge for the lifting ladder. EvenRows/OddRows require an
  // even row count.
  Var EvenRows(Var x);
  Var OddRows(Var x);
  Var InterleaveRows(Var even, Var odd);
  Var Transpose(Var x);
  // out[r] = x[r] + x[min(r+1,h-1)] and out[r] = x[max(r-1,0)] + x[r].
  Var PairSumNext(Var x);
  Var PairSumPrev(Var x);

  Var Reshape(Var x, std::vector<int> shape);
  // Stacks along a leading channel axis; rank-2 inputs count as one channel.
  Var StackChannels(Var a, Var b);
  Var TakeChannel(Var x, int channel);  // {c,h,w} -> {h,w}

  // out[i][j] = plane.flat[idx[i*m+j]], with index -1 reading as 0.
  Var Gather(Var plane, std::shared_ptr<const std::vector<int32_t>> idx, int n,
             int m);
  Var ConcatCols(Var a, Var b);
  Var SliceCols(Var x, int from, int to);

  // Elementwise Gaussian negative log density in nats:
  //   0.5*log(2*pi) + log(s) + (y-mu)^2 / (2*s^2).
  Var GaussianNll(Var y, Var mu, Var s);

  // Per-row negative log of a 3-component Gaussian mixture's mass on the unit
  // cell around v. v {n}; wraw, mu, sraw {n,3} (logits, means, pre-softplus
  // scales). Result {n} in nats.
  Var MixtureNll(Var v, Var wraw, Var mu, Var sraw);

 private:
  struct Node {
    Tensor val;
    bool needs_grad = false;
    Parameter* param = nullptr;
    std::function<void(Tape&)> back;
  };

  Var Push(Tensor val, bool needs);
  void SetBack(Var v, std::function<void(Tape&)> fn);
  const Tensor& GradOf(int id) const { return grads_[id]; }
  // Accumulates g into the gradient slot of id if that node needs gradients.
  void AddGrad(int id, const double* g, int64_t n);
  Tensor* GradSlot(int id);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::unordered_map<Parameter*, int> param_ids_;
  bool backward_done_ = false;

  friend struct TapeOps;
};

}  // namespace pcomp

#endif  // PCOMP_TAPE_H_
