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

#include "sceneforge/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sceneforge/error.hpp"

namespace sceneforge {
namespace kernels {

void CheckFinite(const Tensor& t, const char* op) {
  if (!t.AllFinite()) Fail(ErrorKind::kNumeric, std::string("non-finite input to ") + op);
}

double GeluScalar(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double GeluDerivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

Tensor Gelu(const Tensor& x) {
  CheckFinite(x, "gelu");
  Tensor y = x;
  for (auto& v : y.data()) v = GeluScalar(v);
  return y;
}

Tensor SoftmaxRows(const Tensor& x) {
  CheckFinite(x, "softmax");
  Tensor y = x;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (auto& v : row) {
      v = std::exp(v - m);
      total += v;
    }
    for (auto& v : row) v /= total;
  }
  return y;
}

Tensor LayerNormLastDim(const Tensor& x, double eps, std::vector<double>* inv_std) {
  CheckFinite(x, "layer_norm");
  Tensor y = x;
  const std::size_t n = y.cols();
  if (inv_std) inv_std->assign(y.rows(), 0.0);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    for (auto& v : row) v = (v - mean) * is;
    if (inv_std) (*inv_std)[r] = is;
  }
  return y;
}

Tensor Dropout(const Tensor& x, double keep_prob, Mode mode, Rng& rng, std::vector<double>* mask) {
  Require(keep_prob > 0.0 && keep_prob <= 1.0, ErrorKind::kContract,
          "keep_prob must lie in (0,1], got " + std::to_string(keep_prob));
  CheckFinite(x, "dropout");
  if (mode == Mode::kEval || keep_prob == 1.0) {
    if (mask) mask->assign(x.size(), 1.0);
    return x;
  }
  std::bernoulli_distribution keep(keep_prob);
  const double scale = 1.0 / keep_prob;
  Tensor y = x;
  if (mask) mask->resize(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = keep(rng) ? scale : 0.0;
    y[i] *= m;
    if (mask) (*mask)[i] = m;
  }
  return y;
}

Tensor ConcatLastDim(std::span<const Tensor* const> parts) {
  Require(!parts.empty(), ErrorKind::kDimension, "concat of zero tensors");
  const Tensor& first = *parts.front();
  Shape lead(first.dims().begin(), first.dims().end() - 1);
  std::size_t width = 0;
  for (const Tensor* p : parts) {
    CheckFinite(*p, "concat");
    Shape pl(p->dims().begin(), p->dims().end() - 1);
    Require(pl == lead, ErrorKind::kDimension,
            "concat leading dims differ: " + ShapeString(first.dims()) + " vs " +
                ShapeString(p->dims()));
    width += p->cols();
  }
  Shape out_dims = lead;
  out_dims.push_back(width);
  Tensor y(out_dims);
  const std::size_t rows = first.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = y.row(r);
    std::size_t offset = 0;
    for (const Tensor* p : parts) {
      auto src = p->row(r);
      std::copy(src.begin(), src.end(), dst.begin() + offset);
      offset += src.size();
    }
  }
  return y;
}

Tensor Add(const Tensor& a, const Tensor& b) {
  Require(a.SameShape(b), ErrorKind::kDimension,
          "add shape mismatch " + ShapeString(a.dims()) + " vs " + ShapeString(b.dims()));
  CheckFinite(a, "add");
  CheckFinite(b, "add");
  Tensor y = a;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
  return y;
}

Tensor Scale(const Tensor& x, double c) {
  CheckFinite(x, "scale");
  Tensor y = x;
  for (auto& v : y.data()) v *= c;
  return y;
}

Tensor Linear(const Tensor& x, const Tensor& weight, const Tensor* bias) {
  Require(weight.rank() == 2, ErrorKind::kDimension,
          "linear weight must be rank 2, got " + ShapeString(weight.dims()));
  const std::size_t in = weight.dim(1);
  const std::size_t out = weight.dim(0);
  Require(x.cols() == in, ErrorKind::kDimension,
          "linear input " + ShapeString(x.dims()) + " does not match weight " +
              ShapeString(weight.dims()));
  if (bias) {
    Require(bias->rank() == 1 && bias->dim(0) == out, ErrorKind::kDimension,
            "linear bias " + ShapeString(bias->dims()) + " does not match output width " +
                std::to_string(out));
  }
  Shape out_dims = x.dims();
  out_dims.back() = out;
  Tensor y(out_dims);
  const double* w = weight.data().data();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* xr = x.data().data() + r * in;
    double* yr = y.data().data() + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w + o * in;
      double acc = bias ? (*bias)[o] : 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wo[i];
      yr[o] = acc;
    }
  }
  return y;
}

double LogOnePlusSumExp(std::span<const double> values, std::vector<double>* weights) {
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  double total = 0.0;
  for (double v : values) total += std::exp(v - m);
  double result;
  if (m == 0.0) {
    result = std::log1p(total);
  } else {
    result = m + std::log(std::exp(-m) + total);
  }
  if (weights) {
    weights->resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) (*weights)[i] = std::exp(values[i] - result);
  }
  return result;
}

double MultiLabelCrossEntropy(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  Require(scores.size() == positive.size(), ErrorKind::kDimension,
          "label mask has " + std::to_string(positive.size()) + " entries for " +
              std::to_string(scores.size()) + " scores");
  std::vector<double> neg, pos;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    Require(std::isfinite(scores[i]), ErrorKind::kNumeric, "multilabel cross entropy: non-finite score");
    (positive[i] ? pos : neg).push_back(positive[i] ? -scores[i] : scores[i]);
  }
  return LogOnePlusSumExp(neg, nullptr) + LogOnePlusSumExp(pos, nullptr);
}

}  // namespace kernels

Tensor PrimitiveForward(PrimitiveKind kind, std::span<const Tensor> inputs, Mode mode,
                        double keep_prob, Rng& rng, double scale) {
  auto need = [&](std::size_t n) {
    Require(inputs.size() == n, ErrorKind::kDimension,
            "primitive expects " + std::to_string(n) + " inputs, got " +
                std::to_string(inputs.size()));
  };
  switch (kind) {
    case PrimitiveKind::kGelu:
      need(1);
      return kernels::Gelu(inputs[0]);
    case PrimitiveKind::kSoftmaxRows:
      need(1);
      return kernels::SoftmaxRows(inputs[0]);
    case PrimitiveKind::kLayerNormLastDim:
      need(1);
      return kernels::LayerNormLastDim(inputs[0]);
    case PrimitiveKind::kDropout:
      need(1);
      return kernels::Dropout(inputs[0], keep_prob, mode, rng);
    case PrimitiveKind::kConcatLastDim: {
      std::vector<const Tensor*> ptrs;
      for (const auto& t : inputs) ptrs.push_back(&t);
      return kernels::ConcatLastDim(ptrs);
    }
    case PrimitiveKind::kAdd:
      need(2);
      return kernels::Add(inputs[0], inputs[1]);
    case PrimitiveKind::kScale:
      need(1);
      return kernels::Scale(inputs[0], scale);
  }
  Fail(ErrorKind::kContract, "unknown primitive");
}

}  // namespace sceneforge
