// Copyright 2026 The SceneForge Authors.
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

#include "sceneforge/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sceneforge/error.hpp"

namespace sceneforge {

namespace {

void Axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void RequireSame(const Tensor& a, const Tensor& b, const char* op) {
  Require(a.SameShape(b), ErrorKind::kDimension,
          std::string(op) + " shape mismatch " + ShapeString(a.dims()) + " vs " +
              ShapeString(b.dims()));
}

}  // namespace

Graph::Graph(Mode mode, std::uint64_t dropout_seed) : mode_(mode), rng_(dropout_seed) {}

const Graph::Node& Graph::node(Var v) const {
  Require(v.valid() && v.id < nodes_.size(), ErrorKind::kContract, "invalid graph variable");
  return nodes_[v.id];
}

Graph::Node& Graph::node(Var v) {
  Require(v.valid() && v.id < nodes_.size(), ErrorKind::kContract, "invalid graph variable");
  return nodes_[v.id];
}

const Tensor& Graph::value(Var v) const {
  const Node& n = node(v);
  return n.borrowed ? *n.borrowed : n.value;
}

const Tensor& Graph::grad(Var v) const { return node(v).grad; }

Tensor& Graph::GradSlot(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) n.grad = Tensor(value(v).dims(), 0.0);
  return n.grad;
}

bool Graph::Needs(std::initializer_list<Var> vars) const {
  for (Var v : vars) {
    if (node(v).needs_grad) return true;
  }
  return false;
}

Var Graph::Push(const char* op, Tensor value, bool needs_grad, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::Constant(Tensor value) { return Push("constant", std::move(value), false, nullptr); }

Var Graph::ConstantRef(const Tensor& value) {
  Node n;
  n.borrowed = &value;
  n.op = "constant";
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::Param(ParameterStore& store, const std::string& name) {
  Parameter& p = store.Get(name);
  if (auto it = param_vars_.find(&p); it != param_vars_.end()) return it->second;
  Node n;
  n.borrowed = &p.value;
  n.op = "parameter";
  n.needs_grad = p.trainable;
  n.param = p.trainable ? &p : nullptr;
  nodes_.push_back(std::move(n));
  Var v{static_cast<std::uint32_t>(nodes_.size() - 1)};
  param_vars_.emplace(&p, v);
  return v;
}

Var Graph::Linear(Var x, Var weight, std::optional<Var> bias) {
  Tensor y = kernels::Linear(value(x), value(weight), bias ? &value(*bias) : nullptr);
  const bool ng = Needs({x, weight}) || (bias && requires_grad(*bias));
  return Push("linear", std::move(y), ng, [x, weight, bias](Graph& g, const Tensor& gy) {
    const Tensor& xv = g.value(x);
    const Tensor& wv = g.value(weight);
    const std::size_t in = wv.dim(1), out = wv.dim(0), rows = xv.rows();
    if (g.requires_grad(x)) {
      Tensor& gx = g.GradSlot(x);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < out; ++o) {
          const double d = gy[r * out + o];
          if (d != 0.0) Axpy(d, wv.data().data() + o * in, gx.data().data() + r * in, in);
        }
      }
    }
    if (g.requires_grad(weight)) {
      Tensor& gw = g.GradSlot(weight);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < out; ++o) {
          const double d = gy[r * out + o];
          if (d != 0.0) Axpy(d, xv.data().data() + r * in, gw.data().data() + o * in, in);
        }
      }
    }
    if (bias && g.requires_grad(*bias)) {
      Tensor& gb = g.GradSlot(*bias);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < out; ++o) gb[o] += gy[r * out + o];
      }
    }
  });
}

Var Graph::MatMul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  Require(bv.rank() == 2 && av.rank() <= 2 && av.cols() == bv.dim(0), ErrorKind::kDimension,
          "matmul shape mismatch " + ShapeString(av.dims()) + " x " + ShapeString(bv.dims()));
  const std::size_t n = av.rows(), k = av.cols(), m = bv.dim(1);
  Tensor y(av.rank() == 1 ? Shape{m} : Shape{n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < k; ++t) {
      Axpy(av[i * k + t], bv.data().data() + t * m, y.data().data() + i * m, m);
    }
  }
  return Push("matmul", std::move(y), Needs({a, b}), [a, b](Graph& g, const Tensor& gy) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    const std::size_t n = av.rows(), k = av.cols(), m = bv.dim(1);
    if (g.requires_grad(a)) {
      Tensor& ga = g.GradSlot(a);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < k; ++t) {
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += gy[i * m + j] * bv[t * m + j];
          ga[i * k + t] += acc;
        }
      }
    }
    if (g.requires_grad(b)) {
      Tensor& gb = g.GradSlot(b);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < k; ++t) {
          Axpy(av[i * k + t], gy.data().data() + i * m, gb.data().data() + t * m, m);
        }
      }
    }
  });
}

Var Graph::Add(Var a, Var b) {
  RequireSame(value(a), value(b), "add");
  Tensor y = value(a);
  const Tensor& bv = value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return Push("add", std::move(y), Needs({a, b}), [a, b](Graph& g, const Tensor& gy) {
    for (Var v : {a, b}) {
      if (!g.requires_grad(v)) continue;
      Tensor& gv = g.GradSlot(v);
      for (std::size_t i = 0; i < gy.size(); ++i) gv[i] += gy[i];
    }
  });
}

Var Graph::Sub(Var a, Var b) {
  RequireSame(value(a), value(b), "sub");
  Tensor y = value(a);
  const Tensor& bv = value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return Push("sub", std::move(y), Needs({a, b}), [a, b](Graph& g, const Tensor& gy) {
    if (g.requires_grad(a)) {
      Tensor& ga = g.GradSlot(a);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    }
    if (g.requires_grad(b)) {
      Tensor& gb = g.GradSlot(b);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
    }
  });
}

Var Graph::Mul(Var a, Var b) {
  RequireSame(value(a), value(b), "mul");
  Tensor y = value(a);
  const Tensor& bv = value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return Push("mul", std::move(y), Needs({a, b}), [a, b](Graph& g, const Tensor& gy) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    if (g.requires_grad(a)) {
      Tensor& ga = g.GradSlot(a);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
    }
    if (g.requires_grad(b)) {
      Tensor& gb = g.GradSlot(b);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
    }
  });
}

Var Graph::Scale(Var x, double c) {
  Tensor y = value(x);
  for (auto& v : y.data()) v *= c;
  return Push("scale", std::move(y), Needs({x}), [x, c](Graph& g, const Tensor& gy) {
    Tensor& gx = g.GradSlot(x);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += c * gy[i];
  });
}

Var Graph::AddScalar(Var x, Var s) {
  Require(value(s).size() == 1, ErrorKind::kDimension, "AddScalar expects a one-element tensor");
  Tensor y = value(x);
  const double c = value(s)[0];
  for (auto& v : y.data()) v += c;
  return Push("add_scalar", std::move(y), Needs({x, s}), [x, s](Graph& g, const Tensor& gy) {
    if (g.requires_grad(x)) {
      Tensor& gx = g.GradSlot(x);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    }
    if (g.requires_grad(s)) {
      double total = 0.0;
      for (double v : gy.data()) total += v;
      g.GradSlot(s)[0] += total;
    }
  });
}

Var Graph::AddRowVector(Var x, Var v) {
  const Tensor& xv = value(x);
  const Tensor& vv = value(v);
  Require(vv.rank() == 1 && vv.dim(0) == xv.cols(), ErrorKind::kDimension,
          "row vector " + ShapeString(vv.dims()) + " does not match " + ShapeString(xv.dims()));
  Tensor y = xv;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += vv[c];
  }
  return Push("add_row", std::move(y), Needs({x, v}), [x, v](Graph& g, const Tensor& gy) {
    if (g.requires_grad(x)) {
      Tensor& gx = g.GradSlot(x);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    }
    if (g.requires_grad(v)) {
      Tensor& gv = g.GradSlot(v);
      for (std::size_t r = 0; r < gy.rows(); ++r) {
        auto row = gy.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) gv[c] += row[c];
      }
    }
  });
}

Var Graph::SubRowVector(Var x, Var v) {
  const Tensor& xv = value(x);
  const Tensor& vv = value(v);
  Require(vv.rank() == 1 && vv.dim(0) == xv.cols(), ErrorKind::kDimension,
          "row vector " + ShapeString(vv.dims()) + " does not match " + ShapeString(xv.dims()));
  Tensor y = xv;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] -= vv[c];
  }
  return Push("sub_row", std::move(y), Needs({x, v}), [x, v](Graph& g, const Tensor& gy) {
    if (g.requires_grad(x)) {
      Tensor& gx = g.GradSlot(x);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    }
    if (g.requires_grad(v)) {
      Tensor& gv = g.GradSlot(v);
      for (std::size_t r = 0; r < gy.rows(); ++r) {
        auto row = gy.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) gv[c] -= row[c];
      }
    }
  });
}

Var Graph::Gelu(Var x) {
  Tensor y = kernels::Gelu(value(x));
  return Push("gelu", std::move(y), Needs({x}), [x](Graph& g, const Tensor& gy) {
    const Tensor& xv = g.value(x);
    Tensor& gx = g.GradSlot(x);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * kernels::GeluDerivative(xv[i]);
  });
}

Var Graph::Softmax(Var x) {
  Tensor y = kernels::SoftmaxRows(value(x));
  const Var self{static_cast<std::uint32_t>(nodes_.size())};
  return Push("softmax", std::move(y), Needs({x}), [x, self](Graph& g, const Tensor& gy) {
    const Tensor& yv = g.value(self);
    Tensor& gx = g.GradSlot(x);
    for (std::size_t r = 0; r < yv.rows(); ++r) {
      auto yr = yv.row(r);
      auto gr = gy.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < yr.size(); ++c) dot += yr[c] * gr[c];
      auto out = gx.row(r);
      for (std::size_t c = 0; c < yr.size(); ++c) out[c] += yr[c] * (gr[c] - dot);
    }
  });
}

Var Graph::LayerNorm(Var x, std::optional<Var> gain, std::optional<Var> bias, double eps) {
  std::vector<double> inv_std;
  Tensor xhat = kernels::LayerNormLastDim(value(x), eps, &inv_std);
  const std::size_t d = xhat.cols();
  if (gain) {
    Require(value(*gain).rank() == 1 && value(*gain).dim(0) == d, ErrorKind::kDimension,
            "layer norm gain width mismatch");
  }
  if (bias) {
    Require(value(*bias).rank() == 1 && value(*bias).dim(0) == d, ErrorKind::kDimension,
            "layer norm bias width mismatch");
  }
  Tensor y = xhat;
  if (gain || bias) {
    for (std::size_t r = 0; r < y.rows(); ++r) {
      auto row = y.row(r);
      for (std::size_t c = 0; c < d; ++c) {
        if (gain) row[c] *= value(*gain)[c];
        if (bias) row[c] += value(*bias)[c];
      }
    }
  }
  const bool ng = Needs({x}) || (gain && requires_grad(*gain)) || (bias && requires_grad(*bias));
  return Push("layer_norm", std::move(y), ng,
              [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                  Graph& g, const Tensor& gy) {
                const std::size_t d = xhat.cols();
                const Tensor* gv = gain ? &g.value(*gain) : nullptr;
                if (gain && g.requires_grad(*gain)) {
                  Tensor& gg = g.GradSlot(*gain);
                  for (std::size_t i = 0; i < gy.size(); ++i) gg[i % d] += gy[i] * xhat[i];
                }
                if (bias && g.requires_grad(*bias)) {
                  Tensor& gb = g.GradSlot(*bias);
                  for (std::size_t i = 0; i < gy.size(); ++i) gb[i % d] += gy[i];
                }
                if (!g.requires_grad(x)) return;
                Tensor& gx = g.GradSlot(x);
                std::vector<double> dxhat(d);
                for (std::size_t r = 0; r < xhat.rows(); ++r) {
                  auto xr = xhat.row(r);
                  auto gr = gy.row(r);
                  double mean_d = 0.0, mean_dx = 0.0;
                  for (std::size_t c = 0; c < d; ++c) {
                    dxhat[c] = gv ? gr[c] * (*gv)[c] : gr[c];
                    mean_d += dxhat[c];
                    mean_dx += dxhat[c] * xr[c];
                  }
                  mean_d /= static_cast<double>(d);
                  mean_dx /= static_cast<double>(d);
                  auto out = gx.row(r);
                  for (std::size_t c = 0; c < d; ++c) {
                    out[c] += inv_std[r] * (dxhat[c] - mean_d - xr[c] * mean_dx);
                  }
                }
              });
}

Var Graph::Dropout(Var x, double keep_prob) {
  if (mode_ == Mode::kEval) {
    kernels::CheckFinite(value(x), "dropout");
    return x;
  }
  std::vector<double> mask;
  Tensor y = kernels::Dropout(value(x), keep_prob, mode_, rng_, &mask);
  return Push("dropout", std::move(y), Needs({x}),
              [x, mask = std::move(mask)](Graph& g, const Tensor& gy) {
                Tensor& gx = g.GradSlot(x);
                for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * mask[i];
              });
}

Var Graph::ConcatLastDim(std::span<const Var> parts) {
  std::vector<const Tensor*> ptrs;
  std::vector<Var> vars(parts.begin(), parts.end());
  bool ng = false;
  for (Var p : parts) {
    ptrs.push_back(&value(p));
    ng = ng || requires_grad(p);
  }
  Tensor y = kernels::ConcatLastDim(ptrs);
  return Push("concat", std::move(y), ng, [vars](Graph& g, const Tensor& gy) {
    const std::size_t width = gy.cols();
    std::size_t offset = 0;
    for (Var p : vars) {
      const std::size_t w = g.value(p).cols();
      if (g.requires_grad(p)) {
        Tensor& gp = g.GradSlot(p);
        for (std::size_t r = 0; r < gy.rows(); ++r) {
          for (std::size_t c = 0; c < w; ++c) gp[r * w + c] += gy[r * width + offset + c];
        }
      }
      offset += w;
    }
  });
}

Var Graph::StackRows(std::span<const Var> parts) {
  Require(!parts.empty(), ErrorKind::kDimension, "stack of zero tensors");
  std::vector<Var> vars(parts.begin(), parts.end());
  const std::size_t width = value(parts[0]).cols();
  std::size_t rows = 0;
  bool ng = false;
  for (Var p : parts) {
    const Tensor& t = value(p);
    Require(t.rank() <= 2 && t.cols() == width, ErrorKind::kDimension,
            "stack width mismatch " + ShapeString(t.dims()));
    rows += t.rows();
    ng = ng || requires_grad(p);
  }
  Tensor y({rows, width});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& t = value(p);
    std::copy(t.data().begin(), t.data().end(), y.data().begin() + offset);
    offset += t.size();
  }
  return Push("stack", std::move(y), ng, [vars](Graph& g, const Tensor& gy) {
    std::size_t offset = 0;
    for (Var p : vars) {
      const std::size_t n = g.value(p).size();
      if (g.requires_grad(p)) {
        Tensor& gp = g.GradSlot(p);
        for (std::size_t i = 0; i < n; ++i) gp[i] += gy[offset + i];
      }
      offset += n;
    }
  });
}

Var Graph::SliceRows(Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = value(x);
  Require(xv.rank() == 2 && count > 0 && begin + count <= xv.dim(0), ErrorKind::kDimension,
          "row slice [" + std::to_string(begin) + ", +" + std::to_string(count) +
              ") out of range for " + ShapeString(xv.dims()));
  const std::size_t w = xv.cols();
  Tensor y({count, w});
  std::copy_n(xv.data().begin() + begin * w, count * w, y.data().begin());
  return Push("slice_rows", std::move(y), Needs({x}), [x, begin, w](Graph& g, const Tensor& gy) {
    Tensor& gx = g.GradSlot(x);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[begin * w + i] += gy[i];
  });
}

Var Graph::Row(Var x, std::size_t r) {
  const Tensor& xv = value(x);
  Require(xv.rank() == 2 && r < xv.dim(0), ErrorKind::kDimension,
          "row " + std::to_string(r) + " out of range for " + ShapeString(xv.dims()));
  const std::size_t w = xv.cols();
  auto src = xv.row(r);
  Tensor y({w}, std::vector<double>(src.begin(), src.end()));
  return Push("row", std::move(y), Needs({x}), [x, r, w](Graph& g, const Tensor& gy) {
    Tensor& gx = g.GradSlot(x);
    for (std::size_t i = 0; i < w; ++i) gx[r * w + i] += gy[i];
  });
}

Var Graph::RepeatRows(Var v, std::size_t n) {
  const Tensor& vv = value(v);
  Require(vv.rank() == 1 && n > 0, ErrorKind::kDimension, "repeat expects a vector");
  const std::size_t w = vv.size();
  Tensor y({n, w});
  for (std::size_t r = 0; r < n; ++r) std::copy(vv.data().begin(), vv.data().end(), y.row(r).begin());
  return Push("repeat_rows", std::move(y), Needs({v}), [v](Graph& g, const Tensor& gy) {
    Tensor& gv = g.GradSlot(v);
    for (std::size_t i = 0; i < gy.size(); ++i) gv[i % gv.size()] += gy[i];
  });
}

Var Graph::MeanRows(Var x) {
  const Tensor& xv = value(x);
  Require(xv.rank() == 2, ErrorKind::kDimension, "mean over rows expects a matrix");
  const std::size_t n = xv.dim(0), w = xv.cols();
  Tensor y({w}, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = xv.row(r);
    for (std::size_t c = 0; c < w; ++c) y[c] += row[c];
  }
  for (auto& v : y.data()) v /= static_cast<double>(n);
  return Push("mean_rows", std::move(y), Needs({x}), [x, n, w](Graph& g, const Tensor& gy) {
    Tensor& gx = g.GradSlot(x);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i % w] * inv;
  });
}

Var Graph::Sum(Var x) {
  double total = 0.0;
  for (double v : value(x).data()) total += v;
  return Push("sum", Tensor::Scalar(total), Needs({x}), [x](Graph& g, const Tensor& gy) {
    Tensor& gx = g.GradSlot(x);
    for (auto& v : gx.data()) v += gy[0];
  });
}

Var Graph::Gather(Var x, std::span<const std::size_t> index) {
  const Tensor& xv = value(x);
  Require(xv.rank() == 1 && !index.empty(), ErrorKind::kDimension, "gather expects a vector");
  std::vector<std::size_t> idx(index.begin(), index.end());
  Tensor y({idx.size()});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    Require(idx[i] < xv.size(), ErrorKind::kDimension, "gather index out of range");
    y[i] = xv[idx[i]];
  }
  return Push("gather", std::move(y), Needs({x}), [x, idx = std::move(idx)](Graph& g, const Tensor& gy) {
    Tensor& gx = g.GradSlot(x);
    for (std::size_t i = 0; i < idx.size(); ++i) gx[idx[i]] += gy[i];
  });
}

Var Graph::Norm2(Var x) {
  double ss = 0.0;
  for (double v : value(x).data()) ss += v * v;
  const double norm = std::sqrt(ss);
  return Push("norm2", Tensor::Scalar(norm), Needs({x}), [x, norm](Graph& g, const Tensor& gy) {
    // Subgradient 0 at the origin.
    if (norm == 0.0) return;
    const Tensor& xv = g.value(x);
    Tensor& gx = g.GradSlot(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[0] * xv[i] / norm;
  });
}

Var Graph::MultiLabelCrossEntropy(Var scores, std::span<const std::uint8_t> positive) {
  const Tensor& s = value(scores);
  Require(s.size() == positive.size(), ErrorKind::kDimension,
          "label mask has " + std::to_string(positive.size()) + " entries for " +
              std::to_string(s.size()) + " scores");
  kernels::CheckFinite(s, "multilabel cross entropy");
  std::vector<double> neg_vals, pos_vals;
  std::vector<std::size_t> neg_idx, pos_idx;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (positive[i]) {
      pos_vals.push_back(-s[i]);
      pos_idx.push_back(i);
    } else {
      neg_vals.push_back(s[i]);
      neg_idx.push_back(i);
    }
  }
  std::vector<double> neg_w, pos_w;
  const double loss = kernels::LogOnePlusSumExp(neg_vals, &neg_w) + kernels::LogOnePlusSumExp(pos_vals, &pos_w);
  return Push("multilabel_ce", Tensor::Scalar(loss), Needs({scores}),
              [scores, neg_idx = std::move(neg_idx), pos_idx = std::move(pos_idx),
               neg_w = std::move(neg_w), pos_w = std::move(pos_w)](Graph& g, const Tensor& gy) {
                Tensor& gs = g.GradSlot(scores);
                for (std::size_t i = 0; i < neg_idx.size(); ++i) gs[neg_idx[i]] += gy[0] * neg_w[i];
                for (std::size_t i = 0; i < pos_idx.size(); ++i) gs[pos_idx[i]] -= gy[0] * pos_w[i];
              });
}

AttentionOutput Graph::Attention(Var q, Var k, Var v, std::size_t heads) {
  const Tensor& qv = value(q);
  const Tensor& kv = value(k);
  const Tensor& vv = value(v);
  Require(qv.rank() <= 2 && kv.rank() == 2 && vv.rank() == 2, ErrorKind::kDimension,
          "attention expects matrix keys and values");
  Require(heads > 0 && qv.cols() == kv.cols() && kv.dim(0) == vv.dim(0), ErrorKind::kDimension,
          "attention shapes q" + ShapeString(qv.dims()) + " k" + ShapeString(kv.dims()) + " v" +
              ShapeString(vv.dims()) + " are inconsistent");
  Require(qv.cols() % heads == 0 && vv.cols() % heads == 0, ErrorKind::kDimension,
          "attention width not divisible by head count " + std::to_string(heads));
  kernels::CheckFinite(qv, "attention");
  kernels::CheckFinite(kv, "attention");
  const std::size_t n = qv.rows(), m = kv.dim(0), d = qv.cols(), dv = vv.cols();
  const std::size_t dh = d / heads, dvh = dv / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor weights({heads, n, m});
  Tensor out(qv.rank() == 1 ? Shape{dv} : Shape{n, dv});
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      double* a = weights.data().data() + (h * n + i) * m;
      const double* qi = qv.data().data() + i * d + h * dh;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m; ++j) {
        const double* kj = kv.data().data() + j * d + h * dh;
        double acc = 0.0;
        for (std::size_t t = 0; t < dh; ++t) acc += qi[t] * kj[t];
        a[j] = acc * scale;
        mx = std::max(mx, a[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        a[j] = std::exp(a[j] - mx);
        total += a[j];
      }
      double* oi = out.data().data() + i * dv + h * dvh;
      for (std::size_t j = 0; j < m; ++j) {
        a[j] /= total;
        Axpy(a[j], vv.data().data() + j * dv + h * dvh, oi, dvh);
      }
    }
  }
  AttentionOutput result;
  result.weights = weights;
  result.output = Push(
      "attention", std::move(out), Needs({q, k, v}),
      [q, k, v, heads, scale, weights = std::move(weights)](Graph& g, const Tensor& gy) {
        const Tensor& qv = g.value(q);
        const Tensor& kv = g.value(k);
        const Tensor& vv = g.value(v);
        const std::size_t n = qv.rows(), m = kv.dim(0), d = qv.cols(), dv = vv.cols();
        const std::size_t dh = d / heads, dvh = dv / heads;
        Tensor* gq = g.requires_grad(q) ? &g.GradSlot(q) : nullptr;
        Tensor* gk = g.requires_grad(k) ? &g.GradSlot(k) : nullptr;
        Tensor* gv = g.requires_grad(v) ? &g.GradSlot(v) : nullptr;
        std::vector<double> da(m);
        for (std::size_t h = 0; h < heads; ++h) {
          for (std::size_t i = 0; i < n; ++i) {
            const double* a = weights.data().data() + (h * n + i) * m;
            const double* go = gy.data().data() + i * dv + h * dvh;
            double dot = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
              const double* vj = vv.data().data() + j * dv + h * dvh;
              double acc = 0.0;
              for (std::size_t t = 0; t < dvh; ++t) acc += go[t] * vj[t];
              da[j] = acc;
              dot += acc * a[j];
              if (gv) Axpy(a[j], go, gv->data().data() + j * dv + h * dvh, dvh);
            }
            for (std::size_t j = 0; j < m; ++j) {
              const double ds = a[j] * (da[j] - dot) * scale;
              if (ds == 0.0) continue;
              if (gq) Axpy(ds, kv.data().data() + j * d + h * dh, gq->data().data() + i * d + h * dh, dh);
              if (gk) Axpy(ds, qv.data().data() + i * d + h * dh, gk->data().data() + j * d + h * dh, dh);
            }
          }
        }
      });
  return result;
}

void Graph::Backward(Var root) {
  const Tensor& rv = value(root);
  Require(rv.size() == 1, ErrorKind::kContract,
          "backward root must be a scalar, got " + ShapeString(rv.dims()));
  for (auto& n : nodes_) n.grad = Tensor();
  if (!node(root).needs_grad) return;
  GradSlot(root)[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

void Graph::AccumulateParameterGrads(ParameterStore& store) const {
  for (const auto& n : nodes_) {
    if (!n.param || n.grad.empty()) continue;
    auto dst = n.param->grad.data();
    auto src = n.grad.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  store.MarkGradsReady();
}

std::optional<std::string> Graph::FirstNonFinite() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    const Tensor& v = n.borrowed ? *n.borrowed : n.value;
    if (!v.AllFinite()) {
      std::ostringstream out;
      out << "node " << i << " (" << n.op << ") " << ShapeString(v.dims());
      return out.str();
    }
  }
  return std::nullopt;
}

void Backward(Graph& graph, Var root, ParameterStore& store) {
  graph.Backward(root);
  graph.AccumulateParameterGrads(store);
}

}  // namespace sceneforge
