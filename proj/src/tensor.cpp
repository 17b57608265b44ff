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

#include "sceneforge/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sceneforge/error.hpp"

namespace sceneforge {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kContract: return "contract error";
    case ErrorKind::kRegistry: return "registry error";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kTruncation: return "truncation error";
    case ErrorKind::kVersion: return "version error";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, std::string(ErrorKindName(kind)) + ": " + message);
}

std::string ShapeString(const Shape& dims) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out << 'x';
    out << dims[i];
  }
  out << ']';
  return out.str();
}

std::size_t ShapeSize(const Shape& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

namespace {

void CheckShape(const Shape& dims) {
  Require(!dims.empty() && dims.size() <= 3, ErrorKind::kDimension,
          "tensor rank must be 1..3, got " + std::to_string(dims.size()));
  for (auto d : dims) {
    Require(d > 0, ErrorKind::kDimension, "zero extent in shape " + ShapeString(dims));
  }
}

}  // namespace

Tensor::Tensor(Shape dims, double fill) : dims_(std::move(dims)) {
  CheckShape(dims_);
  data_.assign(ShapeSize(dims_), fill);
}

Tensor::Tensor(Shape dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  CheckShape(dims_);
  Require(ShapeSize(dims_) == data_.size(), ErrorKind::kDimension,
          "shape " + ShapeString(dims_) + " does not match " +
              std::to_string(data_.size()) + " values");
}

Tensor Tensor::Vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  Require(rows.size() > 0, ErrorKind::kDimension, "empty matrix literal");
  const std::size_t cols = rows.begin()->size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    Require(r.size() == cols, ErrorKind::kDimension, "ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), cols}, std::move(data));
}

double Tensor::item() const {
  Require(data_.size() == 1, ErrorKind::kContract,
          "item() on non-scalar tensor " + ShapeString(dims_));
  return data_[0];
}

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

}  // namespace sceneforge
