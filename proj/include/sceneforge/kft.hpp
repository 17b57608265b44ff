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
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "sceneforge/tensor.hpp"

// KFT1 container:
//   bytes 0-3  magic "KFT1"
//   byte  4    dtype (0 = f32, 1 = f64)
//   byte  5    rank r in {1,2,3}
//   then r little-endian u32 extents, then the row-major little-endian payload.
namespace sceneforge::kft {

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

struct Header {
  DType dtype = DType::kF64;
  Shape dims;
  std::size_t payload_bytes() const;
};

struct LoadedTensor {
  Tensor tensor;
  DType dtype = DType::kF64;
};

std::vector<std::uint8_t> Encode(const Tensor& tensor, DType dtype = DType::kF64);
LoadedTensor Decode(const std::uint8_t* bytes, std::size_t size, std::size_t* consumed = nullptr);

void Write(std::ostream& out, const Tensor& tensor, DType dtype = DType::kF64);
LoadedTensor Read(std::istream& in);

void SaveFile(const std::filesystem::path& path, const Tensor& tensor, DType dtype = DType::kF64);
LoadedTensor LoadFile(const std::filesystem::path& path);

// Reads only the header; used to validate manifests without loading payloads.
Header ReadHeader(const std::filesystem::path& path);

}  // namespace sceneforge::kft
