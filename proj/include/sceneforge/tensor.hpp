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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace sceneforge {

using Shape = std::vector<std::size_t>;

std::string ShapeString(const Shape& dims);

/// Dense row-major array of rank 1 to 3 with 64-bit storage.
///
/// Tensors are plain values: copying one copies its data. Leading dimensions
/// are treated as a batch of rows by most kernels, so `rows()` is the product
/// of all but the last extent and `cols()` is the last extent.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape dims, double fill = 0.0);
  Tensor(Shape dims, std::vector<double> data);

  static Tensor Vector(std::initializer_list<double> values);
  static Tensor Matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor Scalar(double value) { return Tensor({1}, {value}); }

  const Shape& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t cols() const { return dims_.empty() ? 0 : dims_.back(); }
  std::size_t rows() const { return cols() == 0 ? 0 : data_.size() / cols(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }

  double item() const;
  bool AllFinite() const;
  void Fill(double value);
  bool SameShape(const Tensor& other) const { return dims_ == other.dims_; }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  Shape dims_;
  std::vector<double> data_;
};

std::size_t ShapeSize(const Shape& dims);

}  // namespace sceneforge
