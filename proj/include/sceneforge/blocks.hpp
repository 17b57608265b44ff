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

#include <cstddef>
#include <string>
#include <vector>

#include "sceneforge/graph.hpp"
#include "sceneforge/parameter_store.hpp"

namespace sceneforge {

/// Two fully connected layers with a GeLU in between: W2 gelu(W1 x + b1) + b2.
/// Accepts a vector or a matrix of row vectors.
struct Mlp {
  std::string prefix;
  std::size_t in_dim = 0;
  std::size_t hidden = 0;
  std::size_t out_dim = 0;

  static Mlp Create(ParameterStore& store, std::string prefix, std::size_t in_dim,
                    std::size_t hidden, std::size_t out_dim, double init_std = kDefaultInitStd);
  Var Forward(Graph& g, ParameterStore& store, Var x) const;
};

/// Residual refine block: Norm(Dropout(mlp(x)) + W3 x).
///
/// The layer norm carries no gain or bias. Dropout only fires in train mode.
struct RefineBlock {
  Mlp mlp;
  std::string residual;  // name of W3, [out_dim, in_dim]

  static RefineBlock Create(ParameterStore& store, const std::string& prefix, std::size_t in_dim,
                            std::size_t hidden, std::size_t out_dim,
                            double init_std = kDefaultInitStd);
  Var Forward(Graph& g, ParameterStore& store, Var x, double keep_prob) const;
  std::size_t in_dim() const { return mlp.in_dim; }
  std::size_t out_dim() const { return mlp.out_dim; }
};

/// Query/key/value projections (no bias) followed by scaled dot-product
/// attention, with an optional output projection.
struct AttentionBlock {
  std::string prefix;
  std::size_t width = 0;
  std::size_t heads = 1;
  bool output_projection = false;

  static AttentionBlock Create(ParameterStore& store, std::string prefix, std::size_t width,
                               std::size_t heads, bool output_projection,
                               double init_std = kDefaultInitStd);
  // `queries` is [n, width] or [width]; `keys_values` is [m, width].
  // Weights come back as [heads, n, m].
  AttentionOutput Forward(Graph& g, ParameterStore& store, Var queries, Var keys_values) const;
};

struct EncoderOptions {
  std::size_t width = 0;
  std::size_t heads = 8;
  std::size_t layers = 2;
  std::size_t ff_hidden = 0;  // 0 means 2 * width
  // Number of position slots; 0 disables positions.
  std::size_t max_positions = 0;
  bool cls = false;
};

/// Post-norm transformer encoder over the rows of a matrix.
class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  static TransformerEncoder Create(ParameterStore& store, const std::string& prefix,
                                   const EncoderOptions& options,
                                   double init_std = kDefaultInitStd);

  const EncoderOptions& options() const { return options_; }
  bool use_positions() const { return options_.max_positions > 0; }

  /// Encodes [n, width] rows into [n, width]. With positions enabled row j
  /// gets position j added first; a configuration error is raised when n
  /// exceeds the table. `attention`, if given, receives one [heads, n, n]
  /// tensor per layer.
  Var Encode(Graph& g, ParameterStore& store, Var sequence, double keep_prob,
             std::vector<Tensor>* attention = nullptr) const;

  /// Prepends the learned CLS vector to `rows` and encodes the result, so the
  /// output has one more row than the input and row 0 belongs to CLS.
  Var EncodeWithCls(Graph& g, ParameterStore& store, Var rows, double keep_prob,
                    std::vector<Tensor>* attention = nullptr) const;

 private:
  struct Layer {
    AttentionBlock attention;
    Mlp feed_forward;
    std::string norm1;
    std::string norm2;
  };

  std::string prefix_;
  EncoderOptions options_;
  std::vector<Layer> layers_;
};

}  // namespace sceneforge
