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

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sceneforge/kernels.hpp"
#include "sceneforge/parameter_store.hpp"
#include "sceneforge/tensor.hpp"

namespace sceneforge {

/// Handle to a node in a Graph. Only meaningful for the graph that made it.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

struct AttentionOutput {
  Var output;
  Tensor weights;  // [heads, queries, keys]
};

/// Reverse-mode tape over dense tensors.
///
/// A graph records one forward evaluation. Parameter leaves borrow their
/// values from a ParameterStore; gradients stay local to the graph until
/// AccumulateParameterGrads() adds them into the store, which lets several
/// graphs be differentiated independently and then reduced in a fixed order.
class Graph {
 public:
  explicit Graph(Mode mode = Mode::kEval, std::uint64_t dropout_seed = 0);

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Mode mode() const { return mode_; }
  std::size_t size() const { return nodes_.size(); }

  Var Constant(Tensor value);
  // Borrows `value`; it must outlive the graph.
  Var ConstantRef(const Tensor& value);
  // Trainable parameters become differentiable leaves, frozen ones constants.
  Var Param(ParameterStore& store, const std::string& name);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const { return node(v).needs_grad; }

  Var Linear(Var x, Var weight, std::optional<Var> bias = std::nullopt);
  // [n,k] x [k,m] -> [n,m]; a rank-1 left operand yields a rank-1 result.
  Var MatMul(Var a, Var b);
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  Var Scale(Var x, double c);
  Var AddScalar(Var x, Var s);
  Var AddRowVector(Var x, Var v);
  Var SubRowVector(Var x, Var v);
  Var Gelu(Var x);
  Var Softmax(Var x);
  Var LayerNorm(Var x, std::optional<Var> gain = std::nullopt,
                std::optional<Var> bias = std::nullopt, double eps = kLayerNormEps);
  Var Dropout(Var x, double keep_prob);
  Var ConcatLastDim(std::span<const Var> parts);
  Var StackRows(std::span<const Var> parts);
  Var SliceRows(Var x, std::size_t begin, std::size_t count);
  Var Row(Var x, std::size_t r);
  Var RepeatRows(Var v, std::size_t n);
  Var MeanRows(Var x);
  Var Sum(Var x);
  Var Gather(Var x, std::span<const std::size_t> index);
  Var Norm2(Var x);
  Var MultiLabelCrossEntropy(Var scores, std::span<const std::uint8_t> positive);

  // Scaled dot-product attention, split into `heads` column groups.
  AttentionOutput Attention(Var q, Var k, Var v, std::size_t heads);

  /// Fills graph-local gradients of `root`, which must hold one element.
  void Backward(Var root);
  void AccumulateParameterGrads(ParameterStore& store) const;

  /// Describes the first node holding a non-finite value, if any.
  std::optional<std::string> FirstNonFinite() const;

 private:
  using BackwardFn = std::function<void(Graph&, const Tensor& grad_out)>;

  struct Node {
    Tensor value;
    const Tensor* borrowed = nullptr;
    Tensor grad;
    const char* op = "";
    bool needs_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  const Node& node(Var v) const;
  Node& node(Var v);
  Var Push(const char* op, Tensor value, bool needs_grad, BackwardFn backward);
  bool Needs(std::initializer_list<Var> vars) const;
  Tensor& GradSlot(Var v);

  Mode mode_;
  Rng rng_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, Var> param_vars_;
};

/// Differentiates `root` and adds the result into every trainable parameter
/// it reaches. Repeated calls accumulate.
void Backward(Graph& graph, Var root, ParameterStore& store);

}  // namespace sceneforge
