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

#include "pcomp/tape.h"

#include <cmath>
#include <cstring>
#include <utility>

#include "pcomp/gaussian.h"
#include "pcomp/kernels.h"

namespace pcomp {

namespace {
void CheckSameShape(const Tensor& a, const Tensor& b, const char* op) {
  PCOMP_CHECK(a.SameShape(b), ErrorKind::kInvalidShape,
              std::string(op) + ": shape mismatch " + ShapeToString(a.shape) +
                  " vs " + ShapeToString(b.shape));
}
}  // namespace

Var Tape::Push(Tensor val, bool needs) {
  PCOMP_CHECK(!backward_done_, ErrorKind::kSequencing,
              "tape already finalized by backward");
  Var v{static_cast<int>(nodes_.size())};
  Node n;
  n.val = std::move(val);
  n.needs_grad = needs;
  nodes_.push_back(std::move(n));
  return v;
}

void Tape::SetBack(Var v, std::function<void(Tape&)> fn) {
  if (nodes_[v.id].needs_grad) nodes_[v.id].back = std::move(fn);
}

Var Tape::Input(Tensor value) { return Push(std::move(value), false); }

Var Tape::Param(Parameter* p) {
  PCOMP_CHECK(p != nullptr, ErrorKind::kContract, "null parameter");
  if (!p->trainable) return Push(p->value, false);
  auto it = param_ids_.find(p);
  if (it != param_ids_.end()) return Var{it->second};
  Var v = Push(p->value, true);
  nodes_[v.id].param = p;
  param_ids_[p] = v.id;
  return v;
}

const Tensor& Tape::Val(Var v) const { return nodes_[v.id].val; }

double Tape::ScalarVal(Var v) const {
  const Tensor& t = Val(v);
  PCOMP_CHECK(t.Size() == 1, ErrorKind::kInvalidShape, "not a scalar");
  return t.v[0];
}

bool Tape::Requires(Var v) const { return nodes_[v.id].needs_grad; }

Tensor* Tape::GradSlot(int id) {
  if (!nodes_[id].needs_grad) return nullptr;
  Tensor& g = grads_[id];
  if (g.Empty()) g = Tensor::Zeros(nodes_[id].val.shape);
  return &g;
}

void Tape::AddGrad(int id, const double* g, int64_t n) {
  Tensor* slot = GradSlot(id);
  if (slot == nullptr) return;
  kernels::Accumulate(slot->data(), g, n);
}

void Tape::Backward(Var loss) {
  PCOMP_CHECK(!backward_done_, ErrorKind::kSequencing,
              "backward already ran on this tape");
  PCOMP_CHECK(Val(loss).Size() == 1, ErrorKind::kContract,
              "backward requires a scalar loss");
  backward_done_ = true;
  grads_.assign(nodes_.size(), Tensor{});
  if (!nodes_[loss.id].needs_grad) return;
  grads_[loss.id] = Tensor::Full({1}, 1.0);
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || grads_[id].Empty()) continue;
    if (n.back) n.back(*this);
  }
  for (const auto& [p, id] : param_ids_) {
    if (!grads_[id].Empty()) {
      kernels::Accumulate(p->grad.data(), grads_[id].data(), grads_[id].Size());
    }
  }
}

Var Tape::Add(Var a, Var b) {
  const Tensor& ta = Val(a);
  const Tensor& tb = Val(b);
  CheckSameShape(ta, tb, "add");
  Tensor out = Tensor::Zeros(ta.shape);
  kernels::Axpy(ta.data(), 1.0, tb.data(), ta.Size(), out.data());
  Var v = Push(std::move(out), Requires(a) || Requires(b));
  SetBack(v, [v, a, b](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    t.AddGrad(a.id, g.data(), g.Size());
    t.AddGrad(b.id, g.data(), g.Size());
  });
  return v;
}

Var Tape::Sub(Var a, Var b) { return Axpy(a, -1.0, b); }

Var Tape::Mul(Var a, Var b) {
  const Tensor& ta = Val(a);
  const Tensor& tb = Val(b);
  CheckSameShape(ta, tb, "mul");
  Tensor out = Tensor::Zeros(ta.shape);
  for (int64_t i = 0; i < ta.Size(); ++i) out.v[i] = ta.v[i] * tb.v[i];
  Var v = Push(std::move(out), Requires(a) || Requires(b));
  SetBack(v, [v, a, b](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    const Tensor& ta = t.Val(a);
    const Tensor& tb = t.Val(b);
    if (t.Requires(a)) {
      Tensor da = Tensor::Zeros(ta.shape);
      for (int64_t i = 0; i < g.Size(); ++i) da.v[i] = g.v[i] * tb.v[i];
      t.AddGrad(a.id, da.data(), da.Size());
    }
    if (t.Requires(b)) {
      Tensor db = Tensor::Zeros(tb.shape);
      for (int64_t i = 0; i < g.Size(); ++i) db.v[i] = g.v[i] * ta.v[i];
      t.AddGrad(b.id, db.data(), db.Size());
    }
  });
  return v;
}

Var Tape::Axpy(Var a, double c, Var b) {
  const Tensor& ta = Val(a);
  const Tensor& tb = Val(b);
  CheckSameShape(ta, tb, "axpy");
  Tensor out = Tensor::Zeros(ta.shape);
  kernels::Axpy(ta.data(), c, tb.data(), ta.Size(), out.data());
  Var v = Push(std::move(out), Requires(a) || Requires(b));
  SetBack(v, [v, a, b, c](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    t.AddGrad(a.id, g.data(), g.Size());
    if (t.Requires(b)) {
      Tensor* slot = t.GradSlot(b.id);
      kernels::AccumulateScaled(slot->data(), c, g.data(), g.Size());
    }
  });
  return v;
}

Var Tape::Scale(Var a, double c) {
  const Tensor& ta = Val(a);
  Tensor out = Tensor::Zeros(ta.shape);
  for (int64_t i = 0; i < ta.Size(); ++i) out.v[i] = c * ta.v[i];
  Var v = Push(std::move(out), Requires(a));
  SetBack(v, [v, a, c](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    Tensor* slot = t.GradSlot(a.id);
    kernels::AccumulateScaled(slot->data(), c, g.data(), g.Size());
  });
  return v;
}

Var Tape::AddScalar(Var a, double c) {
  const Tensor& ta = Val(a);
  Tensor out = Tensor::Zeros(ta.shape);
  for (int64_t i = 0; i < ta.Size(); ++i) out.v[i] = ta.v[i] + c;
  Var v = Push(std::move(out), Requires(a));
  SetBack(v, [v, a](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    t.AddGrad(a.id, g.data(), g.Size());
  });
  return v;
}

Var Tape::Tanh(Var a) {
  const Tensor& ta = Val(a);
  Tensor out = Tensor::Zeros(ta.shape);
  kernels::TanhForward(ta.data(), ta.Size(), out.data());
  Var v = Push(std::move(out), Requires(a));
  SetBack(v, [v, a](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    const Tensor& y = t.Val(v);
    Tensor dx = Tensor::Zeros(y.shape);
    kernels::TanhBackward(y.data(), g.data(), y.Size(), dx.data());
    t.AddGrad(a.id, dx.data(), dx.Size());
  });
  return v;
}

Var Tape::Softplus(Var a) {
  const Tensor& ta = Val(a);
  Tensor out = Tensor::Zeros(ta.shape);
  kernels::SoftplusForward(ta.data(), ta.Size(), out.data());
  Var v = Push(std::move(out), Requires(a));
  SetBack(v, [v, a](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    const Tensor& x = t.Val(a);
    Tensor dx = Tensor::Zeros(x.shape);
    kernels::SoftplusBackward(x.data(), g.data(), x.Size(), dx.data());
    t.AddGrad(a.id, dx.data(), dx.Size());
  });
  return v;
}

Var Tape::Square(Var a) {
  const Tensor& ta = Val(a);
  Tensor out = Tensor::Zeros(ta.shape);
  for (int64_t i = 0; i < ta.Size(); ++i) out.v[i] = ta.v[i] * ta.v[i];
  Var v = Push(std::move(out), Requires(a));
  SetBack(v, [v, a](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    const Tensor& x = t.Val(a);
    Tensor dx = Tensor::Zeros(x.shape);
    for (int64_t i = 0; i < x.Size(); ++i) dx.v[i] = 2.0 * x.v[i] * g.v[i];
    t.AddGrad(a.id, dx.data(), dx.Size());
  });
  return v;
}

Var Tape::Sum(Var a) {
  const Tensor& ta = Val(a);
  Tensor out = Tensor::Scalar(kernels::SumAll(ta.data(), ta.Size()));
  Var v = Push(std::move(out), Requires(a));
  SetBack(v, [v, a](Tape& t) {
    const double g = t.GradOf(v.id).v[0];
    Tensor* slot = t.GradSlot(a.id);
    for (double& x : slot->v) x += g;
  });
  return v;
}

Var Tape::Conv2d(Var x, Var w, Var b) {
  const Tensor& tx = Val(x);
  const Tensor& tw = Val(w);
  const Tensor& tb = Val(b);
  PCOMP_CHECK(tx.Rank() == 3 && tw.Rank() == 4 && tb.Rank() == 1,
              ErrorKind::kInvalidShape, "conv2d: bad ranks");
  const int cin = tx.shape[0], h = tx.shape[1], wd = tx.shape[2];
  const int cout = tw.shape[0], k = tw.shape[2];
  PCOMP_CHECK(tw.shape[1] == cin && tw.shape[3] == k && tb.shape[0] == cout,
              ErrorKind::kInvalidShape, "conv2d: dim mismatch");
  PCOMP_CHECK(k % 2 == 1, ErrorKind::kInvalidShape,
              "conv2d: kernel size must be odd");
  Tensor out = Tensor::Zeros({cout, h, wd});
  kernels::Conv2dForward(tx.data(), cin, h, wd, tw.data(), tb.data(), cout, k,
                         out.data());
  Var v = Push(std::move(out), Requires(x) || Requires(w) || Requires(b));
  SetBack(v, [v, x, w, b, cin, h, wd, cout, k](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    const Tensor& tx = t.Val(x);
    const Tensor& tw = t.Val(w);
    Tensor dx, dw, db;
    double* pdx = nullptr;
    double* pdw = nullptr;
    double* pdb = nullptr;
    if (t.Requires(x)) {
      dx = Tensor::Zeros(tx.shape);
      pdx = dx.data();
    }
    if (t.Requires(w)) {
      dw = Tensor::Zeros(tw.shape);
      pdw = dw.data();
    }
    if (t.Requires(b)) {
      db = Tensor::Zeros({cout});
      pdb = db.data();
    }
    kernels::Conv2dBackward(tx.data(), cin, h, wd, tw.data(), cout, k, g.data(),
                            pdx, pdw, pdb);
    if (pdx) t.AddGrad(x.id, dx.data(), dx.Size());
    if (pdw) t.AddGrad(w.id, dw.data(), dw.Size());
    if (pdb) t.AddGrad(b.id, db.data(), db.Size());
  });
  return v;
}

Var Tape::Affine(Var x, Var w, Var b) {
  const Tensor& tx = Val(x);
  const Tensor& tw = Val(w);
  const Tensor& tb = Val(b);
  PCOMP_CHECK(tx.Rank() == 2 && tw.Rank() == 2 && tb.Rank() == 1,
              ErrorKind::kInvalidShape, "affine: bad ranks");
  const int n = tx.shape[0], din = tx.shape[1], dout = tw.shape[1];
  PCOMP_CHECK(tw.shape[0] == din && tb.shape[0] == dout,
              ErrorKind::kInvalidShape, "affine: dim mismatch");
  Tensor out = Tensor::Zeros({n, dout});
  kernels::AffineForward(tx.data(), n, din, tw.data(), tb.data(), dout,
                         out.data());
  Var v = Push(std::move(out), Requires(x) || Requires(w) || Requires(b));
  SetBack(v, [v, x, w, b, n, din, dout](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    const Tensor& tx = t.Val(x);
    const Tensor& tw = t.Val(w);
    Tensor dx, dw, db;
    double* pdx = nullptr;
    double* pdw = nullptr;
    double* pdb = nullptr;
    if (t.Requires(x)) {
      dx = Tensor::Zeros(tx.shape);
      pdx = dx.data();
    }
    if (t.Requires(w)) {
      dw = Tensor::Zeros(tw.shape);
      pdw = dw.data();
    }
    if (t.Requires(b)) {
      db = Tensor::Zeros({dout});
      pdb = db.data();
    }
    kernels::AffineBackward(tx.data(), n, din, tw.data(), dout, g.data(), pdx,
                            pdw, pdb);
    if (pdx) t.AddGrad(x.id, dx.data(), dx.Size());
    if (pdw) t.AddGrad(w.id, dw.data(), dw.Size());
    if (pdb) t.AddGrad(b.id, db.data(), db.Size());
  });
  return v;
}

Var Tape::EvenRows(Var x) {
  const Tensor& tx = Val(x);
  PCOMP_CHECK(tx.Rank() == 2, ErrorKind::kInvalidShape, "even_rows: rank");
  const int h = tx.shape[0], w = tx.shape[1];
  PCOMP_CHECK(h % 2 == 0, ErrorKind::kInvalidShape,
              "even_rows: odd row count " + std::to_string(h));
  Tensor out = Tensor::Zeros({h / 2, w});
  for (int r = 0; r < h / 2; ++r) {
    std::memcpy(&out.At(r, 0), &tx.v[static_cast<size_t>(2 * r) * w],
                sizeof(double) * w);
  }
  Var v = Push(std::move(out), Requires(x));
  SetBack(v, [v, x, h, w](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    Tensor* slot = t.GradSlot(x.id);
    for (int r = 0; r < h / 2; ++r) {
      kernels::Accumulate(&slot->v[static_cast<size_t>(2 * r) * w],
                          &g.v[static_cast<size_t>(r) * w], w);
    }
  });
  return v;
}

Var Tape::OddRows(Var x) {
  const Tensor& tx = Val(x);
  PCOMP_CHECK(tx.Rank() == 2, ErrorKind::kInvalidShape, "odd_rows: rank");
  const int h = tx.shape[0], w = tx.shape[1];
  PCOMP_CHECK(h % 2 == 0, ErrorKind::kInvalidShape,
              "odd_rows: odd row count " + std::to_string(h));
  Tensor out = Tensor::Zeros({h / 2, w});
  for (int r = 0; r < h / 2; ++r) {
    std::memcpy(&out.At(r, 0), &tx.v[static_cast<size_t>(2 * r + 1) * w],
                sizeof(double) * w);
  }
  Var v = Push(std::move(out), Requires(x));
  SetBack(v, [v, x, h, w](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    Tensor* slot = t.GradSlot(x.id);
    for (int r = 0; r < h / 2; ++r) {
      kernels::Accumulate(&slot->v[static_cast<size_t>(2 * r + 1) * w],
                          &g.v[static_cast<size_t>(r) * w], w);
    }
  });
  return v;
}

Var Tape::InterleaveRows(Var even, Var odd) {
  const Tensor& te = Val(even);
  const Tensor& to = Val(odd);
  CheckSameShape(te, to, "interleave_rows");
  PCOMP_CHECK(te.Rank() == 2, ErrorKind::kInvalidShape,
              "interleave_rows: rank");
  const int h = te.shape[0], w = te.shape[1];
  Tensor out = Tensor::Zeros({2 * h, w});
  for (int r = 0; r < h; ++r) {
    std::memcpy(&out.At(2 * r, 0), &te.v[static_cast<size_t>(r) * w],
                sizeof(double) * w);
    std::memcpy(&out.At(2 * r + 1, 0), &to.v[static_cast<size_t>(r) * w],
                sizeof(double) * w);
  }
  Var v = Push(std::move(out), Requires(even) || Requires(odd));
  SetBack(v, [v, even, odd, h, w](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    if (t.Requires(even)) {
      Tensor* se = t.GradSlot(even.id);
      for (int r = 0; r < h; ++r) {
        kernels::Accumulate(&se->v[static_cast<size_t>(r) * w],
                            &g.v[static_cast<size_t>(2 * r) * w], w);
      }
    }
    if (t.Requires(odd)) {
      Tensor* so = t.GradSlot(odd.id);
      for (int r = 0; r < h; ++r) {
        kernels::Accumulate(&so->v[static_cast<size_t>(r) * w],
                            &g.v[static_cast<size_t>(2 * r + 1) * w], w);
      }
    }
  });
  return v;
}

Var Tape::Transpose(Var x) {
  const Tensor& tx = Val(x);
  PCOMP_CHECK(tx.Rank() == 2, ErrorKind::kInvalidShape, "transpose: rank");
  const int h = tx.shape[0], w = tx.shape[1];
  Tensor out = Tensor::Zeros({w, h});
  kernels::Transpose2d(tx.data(), h, w, out.data());
  Var v = Push(std::move(out), Requires(x));
  SetBack(v, [v, x, h, w](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    Tensor dx = Tensor::Zeros({h, w});
    kernels::Transpose2d(g.data(), w, h, dx.data());
    t.AddGrad(x.id, dx.data(), dx.Size());
  });
  return v;
}

Var Tape::PairSumNext(Var x) {
  const Tensor& tx = Val(x);
  PCOMP_CHECK(tx.Rank() == 2, ErrorKind::kInvalidShape, "pair_sum: rank");
  const int h = tx.shape[0], w = tx.shape[1];
  Tensor out = Tensor::Zeros({h, w});
  kernels::PairSumNextRows(tx.data(), h, w, out.data());
  Var v = Push(std::move(out), Requires(x));
  SetBack(v, [v, x, h, w](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    Tensor dx = Tensor::Zeros({h, w});
    kernels::PairSumNextRowsBackward(g.data(), h, w, dx.data());
    t.AddGrad(x.id, dx.data(), dx.Size());
  });
  return v;
}

Var Tape::PairSumPrev(Var x) {
  const Tensor& tx = Val(x);
  PCOMP_CHECK(tx.Rank() == 2, ErrorKind::kInvalidShape, "pair_sum: rank");
  const int h = tx.shape[0], w = tx.shape[1];
  Tensor out = Tensor::Zeros({h, w});
  kernels::PairSumPrevRows(tx.data(), h, w, out.data());
  Var v = Push(std::move(out), Requires(x));
  SetBack(v, [v, x, h, w](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    Tensor dx = Tensor::Zeros({h, w});
    kernels::PairSumPrevRowsBackward(g.data(), h, w, dx.data());
    t.AddGrad(x.id, dx.data(), dx.Size());
  });
  return v;
}

Var Tape::Reshape(Var x, std::vector<int> shape) {
  const Tensor& tx = Val(x);
  PCOMP_CHECK(NumElements(shape) == tx.Size(), ErrorKind::kInvalidShape,
              "reshape: element count mismatch");
  Tensor out;
  out.shape = std::move(shape);
  out.v = tx.v;
  Var v = Push(std::move(out), Requires(x));
  SetBack(v, [v, x](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    t.AddGrad(x.id, g.data(), g.Size());
  });
  return v;
}

namespace {
int ChannelsOf(const Tensor& t) {
  if (t.Rank() == 2) return 1;
  PCOMP_CHECK(t.Rank() == 3, ErrorKind::kInvalidShape,
              "stack_channels: rank must be 2 or 3");
  return t.shape[0];
}
}  // namespace

Var Tape::StackChannels(Var a, Var b) {
  const Tensor& ta = Val(a);
  const Tensor& tb = Val(b);
  const int ca = ChannelsOf(ta), cb = ChannelsOf(tb);
  const int h = ta.shape[ta.Rank() - 2], w = ta.shape[ta.Rank() - 1];
  PCOMP_CHECK(tb.shape[tb.Rank() - 2] == h && tb.shape[tb.Rank() - 1] == w,
              ErrorKind::kInvalidShape, "stack_channels: plane size mismatch");
  Tensor out = Tensor::Zeros({ca + cb, h, w});
  const int64_t plane = static_cast<int64_t>(h) * w;
  std::memcpy(out.data(), ta.data(), sizeof(double) * ca * plane);
  std::memcpy(out.data() + ca * plane, tb.data(), sizeof(double) * cb * plane);
  Var v = Push(std::move(out), Requires(a) || Requires(b));
  SetBack(v, [v, a, b, ca, cb, plane](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    if (t.Requires(a)) t.AddGrad(a.id, g.data(), ca * plane);
    if (t.Requires(b)) t.AddGrad(b.id, g.data() + ca * plane, cb * plane);
  });
  return v;
}

Var Tape::TakeChannel(Var x, int channel) {
  const Tensor& tx = Val(x);
  PCOMP_CHECK(tx.Rank() == 3, ErrorKind::kInvalidShape, "take_channel: rank");
  PCOMP_CHECK(channel >= 0 && channel < tx.shape[0], ErrorKind::kInvalidShape,
              "take_channel: index out of range");
  const int h = tx.shape[1], w = tx.shape[2];
  const int64_t plane = static_cast<int64_t>(h) * w;
  Tensor out = Tensor::Zeros({h, w});
  std::memcpy(out.data(), tx.data() + channel * plane, sizeof(double) * plane);
  Var v = Push(std::move(out), Requires(x));
  SetBack(v, [v, x, channel, plane](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    Tensor* slot = t.GradSlot(x.id);
    kernels::Accumulate(slot->data() + channel * plane, g.data(), plane);
  });
  return v;
}

Var Tape::Gather(Var plane, std::shared_ptr<const std::vector<int32_t>> idx,
                 int n, int m) {
  const Tensor& tp = Val(plane);
  PCOMP_CHECK(idx != nullptr &&
                  idx->size() == static_cast<size_t>(n) * static_cast<size_t>(m),
              ErrorKind::kInvalidShape, "gather: index table size mismatch");
  Tensor out = Tensor::Zeros({n, m});
  kernels::GatherForward(tp.data(), idx->data(), n, m, out.data());
  Var v = Push(std::move(out), Requires(plane));
  SetBack(v, [v, plane, idx, n, m](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    Tensor* slot = t.GradSlot(plane.id);
    kernels::GatherBackward(g.data(), idx->data(), n, m, slot->data());
  });
  return v;
}

Var Tape::ConcatCols(Var a, Var b) {
  const Tensor& ta = Val(a);
  const Tensor& tb = Val(b);
  PCOMP_CHECK(ta.Rank() == 2 && tb.Rank() == 2 && ta.shape[0] == tb.shape[0],
              ErrorKind::kInvalidShape, "concat_cols: shape mismatch");
  const int n = ta.shape[0], ma = ta.shape[1], mb = tb.shape[1];
  Tensor out = Tensor::Zeros({n, ma + mb});
  for (int i = 0; i < n; ++i) {
    std::memcpy(&out.At(i, 0), &ta.v[static_cast<size_t>(i) * ma],
                sizeof(double) * ma);
    std::memcpy(&out.At(i, ma), &tb.v[static_cast<size_t>(i) * mb],
                sizeof(double) * mb);
  }
  Var v = Push(std::move(out), Requires(a) || Requires(b));
  SetBack(v, [v, a, b, n, ma, mb](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    if (t.Requires(a)) {
      Tensor* sa = t.GradSlot(a.id);
      for (int i = 0; i < n; ++i) {
        kernels::Accumulate(&sa->v[static_cast<size_t>(i) * ma],
                            &g.v[static_cast<size_t>(i) * (ma + mb)], ma);
      }
    }
    if (t.Requires(b)) {
      Tensor* sb = t.GradSlot(b.id);
      for (int i = 0; i < n; ++i) {
        kernels::Accumulate(&sb->v[static_cast<size_t>(i) * mb],
                            &g.v[static_cast<size_t>(i) * (ma + mb) + ma], mb);
      }
    }
  });
  return v;
}

Var Tape::SliceCols(Var x, int from, int to) {
  const Tensor& tx = Val(x);
  PCOMP_CHECK(tx.Rank() == 2 && from >= 0 && to <= tx.shape[1] && from < to,
              ErrorKind::kInvalidShape, "slice_cols: bad range");
  const int n = tx.shape[0], m = tx.shape[1], mw = to - from;
  Tensor out = Tensor::Zeros({n, mw});
  for (int i = 0; i < n; ++i) {
    std::memcpy(&out.At(i, 0), &tx.v[static_cast<size_t>(i) * m + from],
                sizeof(double) * mw);
  }
  Var v = Push(std::move(out), Requires(x));
  SetBack(v, [v, x, n, m, from, mw](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    Tensor* slot = t.GradSlot(x.id);
    for (int i = 0; i < n; ++i) {
      kernels::Accumulate(&slot->v[static_cast<size_t>(i) * m + from],
                          &g.v[static_cast<size_t>(i) * mw], mw);
    }
  });
  return v;
}

Var Tape::GaussianNll(Var y, Var mu, Var s) {
  const Tensor& ty = Val(y);
  const Tensor& tm = Val(mu);
  const Tensor& ts = Val(s);
  CheckSameShape(ty, tm, "gaussian_nll");
  CheckSameShape(ty, ts, "gaussian_nll");
  const int64_t n = ty.Size();
  Tensor out = Tensor::Zeros(ty.shape);
  for (int64_t i = 0; i < n; ++i) {
    const double d = (ty.v[i] - tm.v[i]) / ts.v[i];
    out.v[i] = kHalfLog2Pi + std::log(ts.v[i]) + 0.5 * d * d;
  }
  Var v = Push(std::move(out), Requires(y) || Requires(mu) || Requires(s));
  SetBack(v, [v, y, mu, s, n](Tape& t) {
    const Tensor& g = t.GradOf(v.id);
    const Tensor& ty = t.Val(y);
    const Tensor& tm = t.Val(mu);
    const Tensor& ts = t.Val(s);
    Tensor dy, dm, ds;
    const bool ny = t.Requires(y), nm = t.Requires(mu), ns = t.Requires(s);
    if (ny) dy = Tensor::Zeros(ty.shape);
    if (nm) dm = Tensor::Zeros(ty.shape);
    if (ns) ds = Tensor::Zeros(ty.shape);
    for (int64_t i = 0; i < n; ++i) {
      const double sv = ts.v[i];
      const double d = ty.v[i] - tm.v[i];
      const double gd = g.v[i];
      if (ny) dy.v[i] = gd * d / (sv * sv);
      if (nm) dm.v[i] = -gd * d / (sv * sv);
      if (ns) ds.v[i] = gd * (1.0 / sv - d * d / (sv * sv * sv));
    }
    if (ny) t.AddGrad(y.id, dy.data(), n);
    if (nm) t.AddGrad(mu.id, dm.data(), n);
    if (ns) t.AddGrad(s.id, ds.data(), n);
  });
  return v;
}

namespace {

// Shared piece of the mixture NLL forward/backward: log mixture component
// masses and their responsibilities for one row.
struct MixtureRow {
  double logw[3], s[3], sig[3], zlo[3], zhi[3];
  double resp[3];  // responsibility e_n = softmax(log w_n + log P_n)
  LogIntervalResult lp[3];
  double nll;
};

MixtureRow EvalMixtureRow(double v, const double* wraw, const double* mu,
                          const double* sraw) {
  MixtureRow r;
  double mx = wraw[0];
  for (int n = 1; n < 3; ++n) mx = std::max(mx, wraw[n]);
  double z = 0.0;
  for (int n = 0; n < 3; ++n) z += std::exp(wraw[n] - mx);
  const double lse_w = mx + std::log(z);
  double l[3];
  double lmax = -1e300;
  for (int n = 0; n < 3; ++n) {
    r.logw[n] = wraw[n] - lse_w;
    const double x = sraw[n];
    const double sp = x > 30.0 ? x : std::log1p(std::exp(x));
    r.s[n] = sp + kScaleMin;
    r.sig[n] = x > 30.0 ? 1.0 : 1.0 / (1.0 + std::exp(-x));
    r.zlo[n] = (v - 0.5 - mu[n]) / r.s[n];
    r.zhi[n] = (v + 0.5 - mu[n]) / r.s[n];
    r.lp[n] = LogIntervalProb(r.zlo[n], r.zhi[n]);
    l[n] = r.logw[n] + r.lp[n].logp;
    lmax = std::max(lmax, l[n]);
  }
  double se = 0.0;
  for (int n = 0; n < 3; ++n) se += std::exp(l[n] - lmax);
  const double lse = lmax + std::log(se);
  for (int n = 0; n < 3; ++n) r.resp[n] = std::exp(l[n] - lse);
  r.nll = -lse;
  return r;
}

}  // namespace

Var Tape::MixtureNll(Var v, Var wraw, Var mu, Var sraw) {
  const Tensor& tv = Val(v);
  const Tensor& tw = Val(wraw);
  const Tensor& tm = Val(mu);
  const Tensor& ts = Val(sraw);
  PCOMP_CHECK(tv.Rank() == 1, ErrorKind::kInvalidShape, "mixture_nll: v rank");
  const int n = tv.shape[0];
  const std::vector<int> want{n, 3};
  PCOMP_CHECK(tw.shape == want && tm.shape == want && ts.shape == want,
              ErrorKind::kInvalidShape, "mixture_nll: parameter shapes");
  Tensor out = Tensor::Zeros({n});
#pragma omp parallel for if (kernels::ParallelEnabled() && n > 64)
  for (int i = 0; i < n; ++i) {
    out.v[i] = EvalMixtureRow(tv.v[i], &tw.v[static_cast<size_t>(i) * 3],
                              &tm.v[static_cast<size_t>(i) * 3],
                              &ts.v[static_cast<size_t>(i) * 3])
                   .nll;
  }
  Var out_var =
      Push(std::move(out),
           Requires(v) || Requires(wraw) || Requires(mu) || Requires(sraw));
  SetBack(out_var, [out_var, v, wraw, mu, sraw, n](Tape& t) {
    const Tensor& g = t.GradOf(out_var.id);
    const Tensor& tv = t.Val(v);
    const Tensor& tw = t.Val(wraw);
    const Tensor& tm = t.Val(mu);
    const Tensor& ts = t.Val(sraw);
    const bool nv = t.Requires(v), nw = t.Requires(wraw), nm = t.Requires(mu),
               nss = t.Requires(sraw);
    Tensor dv, dw, dm, dsr;
    if (nv) dv = Tensor::Zeros({n});
    if (nw) dw = Tensor::Zeros({n, 3});
    if (nm) dm = Tensor::Zeros({n, 3});
    if (nss) dsr = Tensor::Zeros({n, 3});
#pragma omp parallel for if (kernels::ParallelEnabled() && n > 64)
    for (int i = 0; i < n; ++i) {
      const MixtureRow r =
          EvalMixtureRow(tv.v[i], &tw.v[static_cast<size_t>(i) * 3],
                         &tm.v[static_cast<size_t>(i) * 3],
                         &ts.v[static_cast<size_t>(i) * 3]);
      const double gi = g.v[i];
      double dvi = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double dsum = (r.lp[c].dlo + r.lp[c].dhi) / r.s[c];
        const double dz_s =
            (r.lp[c].dlo * r.zlo[c] + r.lp[c].dhi * r.zhi[c]) / r.s[c];
        if (nv) dvi += -r.resp[c] * dsum;
        if (nw) {
          dw.v[static_cast<size_t>(i) * 3 + c] =
              gi * (std::exp(r.logw[c]) - r.resp[c]);
        }
        if (nm) dm.v[static_cast<size_t>(i) * 3 + c] = gi * r.resp[c] * dsum;
        if (nss) {
          dsr.v[static_cast<size_t>(i) * 3 + c] =
              gi * r.resp[c] * dz_s * r.sig[c];
        }
      }
      if (nv) dv.v[i] = gi * dvi;
    }
    if (nv) t.AddGrad(v.id, dv.data(), dv.Size());
    if (nw) t.AddGrad(wraw.id, dw.data(), dw.Size());
    if (nm) t.AddGrad(mu.id, dm.data(), dm.Size());
    if (nss) t.AddGrad(sraw.id, dsr.data(), dsr.Size());
  });
  return out_var;
}

}  // namespace pcomp
