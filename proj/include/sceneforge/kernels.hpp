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
#include <random>
#include <span>
#include <vector>

#include "sceneforge/tensor.hpp"

namespace sceneforge {

enum class Mode { kTrain, kEval };

using Rng = std::mt19937_64;

inline constexpr double kLayerNormEps = 1e-5;

// Forward math shared by the autodiff graph and the eager primitive entry
// point. All kernels reject non-finite inputs with a numeric error.
namespace kernels {

void CheckFinite(const Tensor& t, const char* op);

double GeluScalar(double x);
double GeluDerivative(double x);

Tensor Gelu(const Tensor& x);
Tensor SoftmaxRows(const Tensor& x);

// Normalizes each last-axis slice. `inv_std`, when non-null, receives one
// entry per row for use by the backward pass.
Tensor LayerNormLastDim(const Tensor& x, double eps = kLayerNormEps,
                        std::vector<double>* inv_std = nullptr);

// Returns the scaled output. `mask`, when non-null, receives the keep/drop
// pattern (already multiplied by 1/keep_prob).
Tensor Dropout(const Tensor& x, double keep_prob, Mode mode, Rng& rng,
               std::vector<double>* mask = nullptr);

Tensor ConcatLastDim(std::span<const Tensor* const> parts);
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& x, double c);

// y = x W^T + b over the leading dims of x.
Tensor Linear(const Tensor& x, const Tensor& weight, const Tensor* bias);

// log(1 + sum(exp(values))) without overflow. `weights`, when non-null,
// receives d/dv_i of the result.
double LogOnePlusSumExp(std::span<const double> values, std::vector<double>* weights);

// log(1 + sum_neg exp(s)) + log(1 + sum_pos exp(-s)).
double MultiLabelCrossEntropy(std::span<const double> scores, std::span<const std::uint8_t> positive);

}  // namespace kernels

enum class PrimitiveKind { kGelu, kSoftmaxRows, kLayerNormLastDim, kDropout, kConcatLastDim, kAdd, kScale };

// Eager evaluation of a single primitive. `scale` is only read for kScale.
Tensor PrimitiveForward(PrimitiveKind kind, std::span<const Tensor> inputs, Mode mode,
                        double keep_prob, Rng& rng, double scale = 1.0);

}  // namespace sceneforge
