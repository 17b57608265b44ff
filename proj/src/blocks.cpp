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

#include "sceneforge/blocks.hpp"

#include "sceneforge/error.hpp"

namespace sceneforge {

Mlp Mlp::Create(ParameterStore& store, std::string prefix, std::size_t in_dim, std::size_t hidden,
                std::size_t out_dim, double init_std) {
  Mlp m{std::move(prefix), in_dim, hidden, out_dim};
  store.Gaussian(m.prefix + "/w1", {hidden, in_dim}, init_std);
  store.Zeros(m.prefix + "/b1", {hidden});
  store.Gaussian(m.prefix + "/w2", {out_dim, hidden}, init_std);
  store.Zeros(m.prefix + "/b2", {out_dim});
  return m;
}

Var Mlp::Forward(Graph& g, ParameterStore& store, Var x) const {
  Var h = g.Gelu(g.Linear(x, g.Param(store, prefix + "/w1"), g.Param(store, prefix + "/b1")));
  return g.Linear(h, g.Param(store, prefix + "/w2"), g.Param(store, prefix + "/b2"));
}

RefineBlock RefineBlock::Create(ParameterStore& store, const std::string& prefix,
                                std::size_t in_dim, std::size_t hidden, std::size_t out_dim,
                                double init_std) {
  RefineBlock b{Mlp::Create(store, prefix, in_dim, hidden, out_dim, init_std), prefix + "/w3"};
  store.Gaussian(b.residual, {out_dim, in_dim}, init_std);
  return b;
}

Var RefineBlock::Forward(Graph& g, ParameterStore& store, Var x, double keep_prob) const {
  Require(g.value(x).cols() == in_dim(), ErrorKind::kDimension,
          "refine block " + mlp.prefix + " expects width " + std::to_string(in_dim()) + ", got " +
              ShapeString(g.value(x).dims()));
  Var refined = g.Dropout(mlp.Forward(g, store, x), keep_prob);
  return g.LayerNorm(g.Add(refined, g.Linear(x, g.Param(store, residual))));
}

AttentionBlock AttentionBlock::Create(ParameterStore& store, std::string prefix, std::size_t width,
                                      std::size_t heads, bool output_projection, double init_std) {
  Require(heads > 0 && width % heads == 0, ErrorKind::kConfig,
          "width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) +
              " heads");
  AttentionBlock a{std::move(prefix), width, heads, output_projection};
  store.Gaussian(a.prefix + "/wq", {width, width}, init_std);
  store.Gaussian(a.prefix + "/wk", {width, width}, init_std);
  store.Gaussian(a.prefix + "/wv", {width, width}, init_std);
  if (output_projection) {
    store.Gaussian(a.prefix + "/wo", {width, width}, init_std);
    store.Zeros(a.prefix + "/bo", {width});
  }
  return a;
}

AttentionOutput AttentionBlock::Forward(Graph& g, ParameterStore& store, Var queries,
                                        Var keys_values) const {
  Var q = g.Linear(queries, g.Param(store, prefix + "/wq"));
  Var k = g.Linear(keys_values, g.Param(store, prefix + "/wk"));
  Var v = g.Linear(keys_values, g.Param(store, prefix + "/wv"));
  AttentionOutput out = g.Attention(q, k, v, heads);
  if (output_projection) {
    out.output =
        g.Linear(out.output, g.Param(store, prefix + "/wo"), g.Param(store, prefix + "/bo"));
  }
  return out;
}

TransformerEncoder TransformerEncoder::Create(ParameterStore& store, const std::string& prefix,
                                              const EncoderOptions& options, double init_std) {
  Require(options.width > 0, ErrorKind::kConfig, "encoder width must be positive");
  TransformerEncoder enc;
  enc.prefix_ = prefix;
  enc.options_ = options;
  if (enc.options_.ff_hidden == 0) enc.options_.ff_hidden = 2 * options.width;
  const std::size_t w = options.width;
  for (std::size_t l = 0; l < options.layers; ++l) {
    const std::string lp = prefix + "/layer" + std::to_string(l);
    Layer layer{AttentionBlock::Create(store, lp + "/attn", w, options.heads, true, init_std),
                Mlp::Create(store, lp + "/ff", w, enc.options_.ff_hidden, w, init_std),
                lp + "/norm1", lp + "/norm2"};
    store.Ones(layer.norm1 + "/gain", {w});
    store.Zeros(layer.norm1 + "/bias", {w});
    store.Ones(layer.norm2 + "/gain", {w});
    store.Zeros(layer.norm2 + "/bias", {w});
    enc.layers_.push_back(std::move(layer));
  }
  if (options.max_positions > 0) store.Gaussian(prefix + "/positions", {options.max_positions, w}, init_std);
  if (options.cls) store.Gaussian(prefix + "/cls", {w}, init_std);
  return enc;
}

Var TransformerEncoder::Encode(Graph& g, ParameterStore& store, Var sequence, double keep_prob,
                               std::vector<Tensor>* attention) const {
  const Tensor& in = g.value(sequence);
  Require(in.rank() == 2 && in.cols() == options_.width, ErrorKind::kDimension,
          "encoder " + prefix_ + " expects rows of width " + std::to_string(options_.width) +
              ", got " + ShapeString(in.dims()));
  const std::size_t n = in.rows();
  Var x = sequence;
  if (use_positions()) {
    Require(n <= options_.max_positions, ErrorKind::kConfig,
            "sequence of " + std::to_string(n) + " exceeds the " +
                std::to_string(options_.max_positions) + "-slot position table of " + prefix_);
    x = g.Add(x, g.SliceRows(g.Param(store, prefix_ + "/positions"), 0, n));
  }
  for (const Layer& layer : layers_) {
    AttentionOutput att = layer.attention.Forward(g, store, x, x);
    if (attention) attention->push_back(std::move(att.weights));
    x = g.LayerNorm(g.Add(x, g.Dropout(att.output, keep_prob)),
                    g.Param(store, layer.norm1 + "/gain"), g.Param(store, layer.norm1 + "/bias"));
    Var ff = layer.feed_forward.Forward(g, store, x);
    x = g.LayerNorm(g.Add(x, g.Dropout(ff, keep_prob)), g.Param(store, layer.norm2 + "/gain"),
                    g.Param(store, layer.norm2 + "/bias"));
  }
  return x;
}

Var TransformerEncoder::EncodeWithCls(Graph& g, ParameterStore& store, Var rows, double keep_prob,
                                      std::vector<Tensor>* attention) const {
  Require(options_.cls, ErrorKind::kConfig, "encoder " + prefix_ + " has no CLS vector");
  const Var parts[] = {g.Param(store, prefix_ + "/cls"), rows};
  return Encode(g, store, g.StackRows(parts), keep_prob, attention);
}

}  // namespace sceneforge
