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

#include "sceneforge/kft.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sceneforge/error.hpp"

namespace sceneforge::kft {

namespace {

constexpr char kMagic[4] = {'K', 'F', 'T', '1'};
constexpr std::size_t kFixedHeader = 6;

void PutLe(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t GetLe(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::size_t ElementBytes(DType dtype) { return dtype == DType::kF32 ? 4 : 8; }

Header ParseHeader(const std::uint8_t* bytes, std::size_t size, std::size_t* header_bytes) {
  Require(size >= kFixedHeader, ErrorKind::kTruncation, "KFT1 header truncated");
  Require(std::memcmp(bytes, kMagic, 4) == 0, ErrorKind::kFormat, "bad KFT1 magic bytes");
  Header h;
  Require(bytes[4] <= 1, ErrorKind::kFormat, "unknown KFT1 dtype " + std::to_string(bytes[4]));
  h.dtype = static_cast<DType>(bytes[4]);
  const unsigned rank = bytes[5];
  Require(rank >= 1 && rank <= 3, ErrorKind::kFormat,
          "KFT1 rank must be 1..3, got " + std::to_string(rank));
  const std::size_t need = kFixedHeader + 4 * rank;
  Require(size >= need, ErrorKind::kTruncation, "KFT1 extents truncated");
  for (unsigned i = 0; i < rank; ++i) {
    const auto extent = static_cast<std::size_t>(GetLe(bytes + kFixedHeader + 4 * i, 4));
    Require(extent > 0, ErrorKind::kFormat, "KFT1 zero extent");
    h.dims.push_back(extent);
  }
  *header_bytes = need;
  return h;
}

}  // namespace

std::size_t Header::payload_bytes() const { return ShapeSize(dims) * ElementBytes(dtype); }

std::vector<std::uint8_t> Encode(const Tensor& tensor, DType dtype) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(static_cast<std::uint8_t>(dtype));
  out.push_back(static_cast<std::uint8_t>(tensor.rank()));
  for (auto d : tensor.dims()) PutLe(out, d, 4);
  out.reserve(out.size() + tensor.size() * ElementBytes(dtype));
  for (double v : tensor.data()) {
    if (dtype == DType::kF32) {
      PutLe(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
    } else {
      PutLe(out, std::bit_cast<std::uint64_t>(v), 8);
    }
  }
  return out;
}

LoadedTensor Decode(const std::uint8_t* bytes, std::size_t size, std::size_t* consumed) {
  std::size_t header_bytes = 0;
  Header h = ParseHeader(bytes, size, &header_bytes);
  const std::size_t total = header_bytes + h.payload_bytes();
  Require(size >= total, ErrorKind::kTruncation,
          "KFT1 payload truncated: need " + std::to_string(total) + " bytes, have " +
              std::to_string(size));
  std::vector<double> data(ShapeSize(h.dims));
  const std::uint8_t* p = bytes + header_bytes;
  for (auto& v : data) {
    if (h.dtype == DType::kF32) {
      v = std::bit_cast<float>(static_cast<std::uint32_t>(GetLe(p, 4)));
      p += 4;
    } else {
      v = std::bit_cast<double>(GetLe(p, 8));
      p += 8;
    }
  }
  if (consumed) *consumed = total;
  return {Tensor(h.dims, std::move(data)), h.dtype};
}

void Write(std::ostream& out, const Tensor& tensor, DType dtype) {
  const auto bytes = Encode(tensor, dtype);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

LoadedTensor Read(std::istream& in) {
  std::uint8_t fixed[kFixedHeader];
  in.read(reinterpret_cast<char*>(fixed), kFixedHeader);
  Require(in.gcount() == static_cast<std::streamsize>(kFixedHeader), ErrorKind::kTruncation,
          "KFT1 header truncated");
  std::vector<std::uint8_t> buf(fixed, fixed + kFixedHeader);
  Require(std::memcmp(fixed, kMagic, 4) == 0, ErrorKind::kFormat, "bad KFT1 magic bytes");
  const unsigned rank = fixed[5];
  Require(rank >= 1 && rank <= 3, ErrorKind::kFormat,
          "KFT1 rank must be 1..3, got " + std::to_string(rank));
  buf.resize(kFixedHeader + 4 * rank);
  in.read(reinterpret_cast<char*>(buf.data() + kFixedHeader), 4 * rank);
  Require(in.gcount() == static_cast<std::streamsize>(4 * rank), ErrorKind::kTruncation,
          "KFT1 extents truncated");
  std::size_t header_bytes = 0;
  Header h = ParseHeader(buf.data(), buf.size(), &header_bytes);
  const std::size_t payload = h.payload_bytes();
  buf.resize(header_bytes + payload);
  in.read(reinterpret_cast<char*>(buf.data() + header_bytes), static_cast<std::streamsize>(payload));
  Require(in.gcount() == static_cast<std::streamsize>(payload), ErrorKind::kTruncation,
          "KFT1 payload truncated");
  return Decode(buf.data(), buf.size());
}

void SaveFile(const std::filesystem::path& path, const Tensor& tensor, DType dtype) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  Write(out, tensor, dtype);
  Require(static_cast<bool>(out), ErrorKind::kIo, "failed writing " + path.string());
}

LoadedTensor LoadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t consumed = 0;
  try {
    LoadedTensor t = Decode(bytes.data(), bytes.size(), &consumed);
    Require(consumed == bytes.size(), ErrorKind::kFormat,
            "trailing bytes after KFT1 payload in " + path.string());
    return t;
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " (" + path.string() + ")");
  }
}

Header ReadHeader(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  std::uint8_t buf[kFixedHeader + 12] = {};
  in.read(reinterpret_cast<char*>(buf), sizeof(buf));
  const auto got = static_cast<std::size_t>(in.gcount());
  std::size_t header_bytes = 0;
  Header h = ParseHeader(buf, got, &header_bytes);
  const auto file_size = std::filesystem::file_size(path);
  Require(file_size >= header_bytes + h.payload_bytes(), ErrorKind::kTruncation,
          "KFT1 payload truncated in " + path.string());
  return h;
}

}  // namespace sceneforge::kft
