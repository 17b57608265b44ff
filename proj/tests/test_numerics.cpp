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

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "sceneforge/error.hpp"
#include "sceneforge/gradcheck.hpp"
#include "sceneforge/graph.hpp"
#include "sceneforge/kernels.hpp"
#include "sceneforge/kft.hpp"
#include "test_util.hpp"

using namespace sceneforge;
using sceneforge::testing::KindOf;
using sceneforge::testing::RandomTensor;
using sceneforge::testing::WeightedSum;

namespace {

Shape RandomShape(std::mt19937_64& rng, std::size_t max_rank = 3) {
  std::uniform_int_distribution<std::size_t> rank_dist(1, max_rank), extent(1, 8);
  Shape s(rank_dist(rng));
  for (auto& d : s) d = extent(rng);
  return s;
}

}  // namespace

TEST_CASE("primitive examples") {
  Rng rng(0);
  CHECK(kernels::Gelu(Tensor::Vector({0.0}))[0] == 0.0);

  Tensor sm = kernels::SoftmaxRows(Tensor::Matrix({{0, 0, 0, 0}}));
  for (double v : sm.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

  Tensor ln = kernels::LayerNormLastDim(Tensor::Vector({1.0, 3.0}));
  CHECK(std::abs(ln[0] + 1.0) < 1e-4);
  CHECK(std::abs(ln[1] - 1.0) < 1e-4);

  Tensor x = RandomTensor({3, 5}, rng);
  CHECK(kernels::Dropout(x, 0.5, Mode::kEval, rng) == x);

  Tensor scaled = PrimitiveForward(PrimitiveKind::kScale, std::vector<Tensor>{x}, Mode::kEval, 1.0, rng, 2.0);
  CHECK(scaled[3] == 2.0 * x[3]);
}

TEST_CASE("dropout in train mode zeroes and rescales") {
  Rng rng(7);
  Tensor x({20000}, 1.0);
  Tensor y = kernels::Dropout(x, 0.5, Mode::kTrain, rng);
  std::size_t kept = 0;
  for (double v : y.data()) {
    CHECK((v == 0.0 || v == 2.0));
    kept += v != 0.0;
  }
  // Binomial(20000, 0.5): 5 sigma is about 354.
  CHECK(std::abs(static_cast<double>(kept) - 10000.0) < 354.0);
  CHECK(KindOf([&] { kernels::Dropout(x, 0.0, Mode::kTrain, rng); }) == ErrorKind::kContract);
}

TEST_CASE("primitive errors") {
  Rng rng(0);
  Tensor bad = Tensor::Vector({1.0, std::nan("")});
  CHECK(KindOf([&] { kernels::Gelu(bad); }) == ErrorKind::kNumeric);
  CHECK(KindOf([&] { kernels::SoftmaxRows(bad); }) == ErrorKind::kNumeric);
  CHECK(KindOf([&] {
          kernels::Add(Tensor::Vector({1, 2}), Tensor::Vector({1, 2, 3}));
        }) == ErrorKind::kDimension);
  CHECK(KindOf([&] {
          PrimitiveForward(PrimitiveKind::kAdd, std::vector<Tensor>{Tensor::Vector({1})},
                           Mode::kEval, 1.0, rng);
        }) == ErrorKind::kDimension);
  CHECK(KindOf([] { Tensor({2, 0}); }) == ErrorKind::kDimension);
  CHECK(KindOf([] { Tensor({1, 1, 1, 1}); }) == ErrorKind::kDimension);
}

TEST_CASE("matmul_linear examples") {
  Tensor x = Tensor::Matrix({{1, 2}, {3, 4}});
  Tensor w = Tensor::Matrix({{5, 6}});
  Tensor y = kernels::Linear(x, w, nullptr);
  CHECK(y.dims() == Shape{2, 1});
  CHECK(y[0] == 17.0);
  CHECK(y[1] == 39.0);

  Tensor zero({2, 2}, 0.0);
  Tensor b = Tensor::Vector({7, 7});
  Tensor yb = kernels::Linear(x, zero, &b);
  CHECK(yb == Tensor::Matrix({{7, 7}, {7, 7}}));

  Tensor eye = Tensor::Matrix({{1, 0}, {0, 1}});
  Tensor zb = Tensor::Vector({0, 0});
  CHECK(kernels::Linear(x, eye, &zb) == x);

  CHECK_THROWS_AS(kernels::Linear(x, Tensor::Matrix({{1, 2, 3}}), nullptr), Error);
}

TEST_CASE("backward examples") {
  ParameterStore store(0);
  store.Add("x", Tensor::Scalar(3.0));
  store.Add("y", Tensor::Scalar(4.0));
  {
    Graph g;
    Var root = g.Mul(g.Param(store, "x"), g.Param(store, "y"));
    Backward(g, root, store);
  }
  CHECK(store.Get("x").grad[0] == 4.0);
  CHECK(store.Get("y").grad[0] == 3.0);

  // Accumulates across calls.
  {
    Graph g;
    Var root = g.Mul(g.Param(store, "x"), g.Param(store, "y"));
    Backward(g, root, store);
  }
  CHECK(store.Get("x").grad[0] == 8.0);

  store.ZeroGrad();
  {
    Graph g;
    Var root = g.Sum(g.Constant(Tensor::Vector({1, 2})));
    Backward(g, root, store);
  }
  CHECK(store.Get("x").grad[0] == 0.0);
  CHECK(store.Get("y").grad[0] == 0.0);

  Graph g;
  Var v = g.Param(store, "x");
  Var wide = g.RepeatRows(v, 3);
  CHECK(KindOf([&] { g.Backward(wide); }) == ErrorKind::kContract);
}

TEST_CASE("two-layer multilabel net matches finite differences") {
  ParameterStore store(0);
  store.Gaussian("w1", {6, 5}, 0.5);
  store.Gaussian("b1", {6}, 0.5);
  store.Gaussian("w2", {4, 6}, 0.5);
  store.Gaussian("b2", {4}, 0.5);
  Rng rng(0);
  const Tensor input = RandomTensor({5}, rng);
  const std::vector<std::uint8_t> positive = {1, 0, 0, 1};
  LossBuilder loss = [&](Graph& g, ParameterStore& s) {
    Var h = g.Gelu(g.Linear(g.ConstantRef(input), g.Param(s, "w1"), g.Param(s, "b1")));
    Var out = g.Linear(h, g.Param(s, "w2"), g.Param(s, "b2"));
    return g.MultiLabelCrossEntropy(out, positive);
  };
  auto result = FiniteDiffCheck(loss, store);
  // w1 has 30 entries and is sampled down to 24.
  CHECK(result.entries_checked == 24 + 6 + 24 + 4);
  CHECK(result.max_relative_error < 1e-4);
}

TEST_CASE("finite_diff_check examples") {
  SUBCASE("linear regression") {
    ParameterStore store(3);
    store.Gaussian("w", {1, 4}, 1.0);
    store.Gaussian("b", {1}, 1.0);
    Rng rng(1);
    const Tensor x = RandomTensor({16, 4}, rng);
    const Tensor y = RandomTensor({16, 1}, rng);
    LossBuilder loss = [&](Graph& g, ParameterStore& s) {
      Var pred = g.Linear(g.ConstantRef(x), g.Param(s, "w"), g.Param(s, "b"));
      Var diff = g.Sub(pred, g.ConstantRef(y));
      return g.Scale(g.Sum(g.Mul(diff, diff)), 1.0 / 16.0);
    };
    CHECK(FiniteDiffCheck(loss, store).max_relative_error < 1e-4);
  }
  SUBCASE("constant loss") {
    ParameterStore store(0);
    store.Gaussian("w", {3}, 1.0);
    LossBuilder loss = [](Graph& g, ParameterStore&) { return g.Constant(Tensor::Scalar(2.5)); };
    auto result = FiniteDiffCheck(loss, store);
    CHECK(result.max_relative_error == 0.0);
    CHECK(store.Get("w").grad[0] == 0.0);
  }
  SUBCASE("non-deterministic loss is rejected") {
    ParameterStore store(0);
    store.Gaussian("w", {3}, 1.0);
    int calls = 0;
    LossBuilder loss = [&](Graph& g, ParameterStore& s) {
      ++calls;
      return g.Scale(g.Sum(g.Param(s, "w")), static_cast<double>(calls));
    };
    CHECK(KindOf([&] { FiniteDiffCheck(loss, store); }) == ErrorKind::kContract);
  }
}

TEST_CASE("gaussian init") {
  ParameterStore a(11), b(11);
  a.Gaussian("w", {8, 8});
  b.Gaussian("w", {8, 8});
  CHECK(a.Get("w").value == b.Get("w").value);
  CHECK(a.Get("w").value.dims() == a.Get("w").grad.dims());
  CHECK(KindOf([&] { a.Gaussian("w", {2}); }) == ErrorKind::kRegistry);

  const Tensor& bias = a.Zeros("bias", {16});
  for (double v : bias.data()) CHECK(v == 0.0);

  ParameterStore big(0);
  const Tensor& w = big.Gaussian("w", {768, 768});
  const double n = static_cast<double>(w.size());
  const double mean = std::accumulate(w.data().begin(), w.data().end(), 0.0) / n;
  double var = 0.0;
  for (double v : w.data()) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  CHECK(std::abs(mean) < 3.0 * 0.02 / std::sqrt(n));
  CHECK(std::abs(sd - 0.02) < 0.002);
}

TEST_CASE("softmax and layer norm properties on random inputs") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor x = RandomTensor(RandomShape(rng), rng, 3.0);
    Tensor s = kernels::SoftmaxRows(x);
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double total = 0.0;
      for (double v : s.row(r)) {
        CHECK(v > 0.0);
        CHECK(v < 1.0 + (s.cols() == 1 ? 1e-12 : 0.0));
        total += v;
      }
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
    if (x.cols() < 2) continue;
    Tensor ln = kernels::LayerNormLastDim(x);
    for (std::size_t r = 0; r < ln.rows(); ++r) {
      // Output variance is var/(var + eps), so it is within 1e-3 of one only
      // once the input variance reaches 1e-2.
      auto xr = x.row(r);
      double in_mean = 0.0, in_var = 0.0;
      for (double v : xr) in_mean += v;
      in_mean /= static_cast<double>(xr.size());
      for (double v : xr) in_var += (v - in_mean) * (v - in_mean);
      in_var /= static_cast<double>(xr.size());
      double mean = 0.0, var = 0.0;
      for (double v : ln.row(r)) mean += v;
      mean /= static_cast<double>(ln.cols());
      for (double v : ln.row(r)) var += (v - mean) * (v - mean);
      var /= static_cast<double>(ln.cols());
      CHECK(std::abs(mean) < 1e-5);
      CHECK(var == doctest::Approx(in_var / (in_var + kLayerNormEps)).epsilon(1e-9));
      if (in_var >= 1e-2) CHECK(std::abs(var - 1.0) < 1e-3);
    }
  }
}

TEST_CASE("every primitive matches finite differences on random shapes") {
  Rng rng(17);
  using Op = std::function<Var(Graph&, Var)>;
  const std::vector<std::pair<std::string, Op>> unary = {
      {"gelu", [](Graph& g, Var x) { return g.Gelu(x); }},
      {"softmax", [](Graph& g, Var x) { return g.Softmax(x); }},
      {"layer_norm", [](Graph& g, Var x) { return g.LayerNorm(x); }},
      {"dropout", [](Graph& g, Var x) { return g.Dropout(x, 0.5); }},
      {"scale", [](Graph& g, Var x) { return g.Scale(x, -1.7); }},
      {"add", [](Graph& g, Var x) { return g.Add(x, g.Mul(x, x)); }},
      {"concat", [](Graph& g, Var x) {
         std::vector<Var> parts = {x, g.Gelu(x), x};
         return g.ConcatLastDim(parts);
       }},
      {"norm2", [](Graph& g, Var x) { return g.Norm2(x); }},
  };
  for (const auto& [name, op] : unary) {
    for (int trial = 0; trial < 6; ++trial) {
      CAPTURE(name);
      CAPTURE(trial);
      ParameterStore store(trial);
      Shape shape = RandomShape(rng);
      if (name == "layer_norm") shape.back() = std::max<std::size_t>(shape.back(), 2);
      store.Add("x", RandomTensor(shape, rng));
      LossBuilder loss = [&, op = op](Graph& g, ParameterStore& s) {
        return WeightedSum(g, op(g, g.Param(s, "x")));
      };
      GradCheckOptions opts;
      opts.max_entries_per_param = 64;
      opts.mode = name == "dropout" ? Mode::kTrain : Mode::kEval;
      opts.dropout_seed = 1234 + trial;
      CHECK(FiniteDiffCheck(loss, store, opts).max_relative_error < 1e-4);
    }
  }
}

TEST_CASE("structural ops match finite differences") {
  Rng rng(23);
  ParameterStore store(0);
  store.Add("a", RandomTensor({4, 6}, rng));
  store.Add("b", RandomTensor({6, 3}, rng));
  store.Add("v", RandomTensor({6}, rng));
  store.Add("s", RandomTensor({1}, rng));
  store.Add("gain", RandomTensor({6}, rng));
  store.Add("shift", RandomTensor({6}, rng));
  const std::vector<std::size_t> idx = {2, 0, 2, 1};
  const std::vector<std::uint8_t> positive = {0, 1, 1, 0};
  LossBuilder loss = [&](Graph& g, ParameterStore& s) {
    Var a = g.Param(s, "a"), b = g.Param(s, "b"), v = g.Param(s, "v");
    Var prod = g.MatMul(a, b);
    Var shifted = g.SubRowVector(g.AddRowVector(a, v), g.Row(a, 1));
    Var normed = g.LayerNorm(shifted, g.Param(s, "gain"), g.Param(s, "shift"));
    std::vector<Var> rows = {g.Row(normed, 0), g.SliceRows(normed, 2, 2), g.RepeatRows(v, 2)};
    Var stacked = g.StackRows(rows);
    Var mean = g.MeanRows(stacked);
    Var gathered = g.Gather(g.Row(prod, 3), idx);
    Var ce = g.MultiLabelCrossEntropy(g.AddScalar(gathered, g.Param(s, "s")), positive);
    Var vec_mat = g.MatMul(mean, b);
    return g.Add(g.Add(WeightedSum(g, stacked), WeightedSum(g, vec_mat)), ce);
  };
  CHECK(FiniteDiffCheck(loss, store).max_relative_error < 1e-4);
}

TEST_CASE("attention matches finite differences") {
  Rng rng(29);
  for (std::size_t heads : {1u, 2u, 4u}) {
    ParameterStore store(0);
    store.Add("q", RandomTensor({3, 8}, rng));
    store.Add("k", RandomTensor({5, 8}, rng));
    store.Add("v", RandomTensor({5, 4}, rng));
    LossBuilder loss = [&](Graph& g, ParameterStore& s) {
      auto att = g.Attention(g.Param(s, "q"), g.Param(s, "k"), g.Param(s, "v"), heads);
      return WeightedSum(g, att.output);
    };
    CHECK(FiniteDiffCheck(loss, store).max_relative_error < 1e-4);
  }
}

TEST_CASE("concat then slice recovers inputs bit-exactly") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<std::size_t> extent(1, 8);
    const Shape lead = {extent(rng), extent(rng)};
    std::vector<Tensor> parts;
    for (int p = 0; p < 3; ++p) parts.push_back(RandomTensor({lead[0], lead[1], extent(rng)}, rng));
    std::vector<const Tensor*> ptrs = {&parts[0], &parts[1], &parts[2]};
    Tensor joined = kernels::ConcatLastDim(ptrs);
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
      for (std::size_t r = 0; r < p.rows(); ++r) {
        for (std::size_t c = 0; c < p.cols(); ++c) {
          CHECK(joined.row(r)[offset + c] == p.row(r)[c]);
        }
      }
      offset += p.cols();
    }
  }
}

TEST_CASE("fixed seed gives identical forward values and gradients") {
  auto run = [] {
    ParameterStore store(42);
    store.Gaussian("w", {5, 7}, 0.3);
    Rng rng(3);
    const Tensor x = RandomTensor({4, 7}, rng);
    Graph g(Mode::kTrain, 9);
    Var out = g.Dropout(g.Gelu(g.Linear(g.ConstantRef(x), g.Param(store, "w"))), 0.5);
    Var root = WeightedSum(g, g.Softmax(out));
    Backward(g, root, store);
    return std::make_pair(g.value(root).item(), store.Get("w").grad);
  };
  auto [l1, g1] = run();
  auto [l2, g2] = run();
  CHECK(l1 == l2);
  CHECK(g1 == g2);
}

TEST_CASE("KFT1 round trip and errors") {
  sceneforge::testing::TempDir dir("kft");
  Rng rng(0);
  SUBCASE("12x2048 f32 is bit-identical") {
    Tensor t = RandomTensor({12, 2048}, rng);
    for (auto& v : t.data()) v = static_cast<float>(v);
    const auto path = dir.path() / "a.kft";
    kft::SaveFile(path, t, kft::DType::kF32);
    auto loaded = kft::LoadFile(path);
    CHECK(loaded.dtype == kft::DType::kF32);
    CHECK(loaded.tensor == t);
    CHECK(kft::Encode(loaded.tensor, loaded.dtype) == kft::Encode(t, kft::DType::kF32));
    CHECK(std::filesystem::file_size(path) == 6 + 8 + 12 * 2048 * 4);
  }
  SUBCASE("fuzzed shapes round trip at both widths") {
    for (int trial = 0; trial < 100; ++trial) {
      Tensor t = RandomTensor(RandomShape(rng), rng);
      auto bytes = kft::Encode(t, kft::DType::kF64);
      auto back = kft::Decode(bytes.data(), bytes.size());
      CHECK(back.tensor == t);
      CHECK(kft::Encode(back.tensor) == bytes);
      for (auto& v : t.data()) v = static_cast<float>(v);
      auto fbytes = kft::Encode(t, kft::DType::kF32);
      CHECK(kft::Decode(fbytes.data(), fbytes.size()).tensor == t);
    }
  }
  SUBCASE("header errors") {
    auto bytes = kft::Encode(Tensor::Vector({1, 2, 3}));
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK(KindOf([&] { kft::Decode(bad_magic.data(), bad_magic.size()); }) == ErrorKind::kFormat);
    auto bad_dtype = bytes;
    bad_dtype[4] = 7;
    CHECK(KindOf([&] { kft::Decode(bad_dtype.data(), bad_dtype.size()); }) == ErrorKind::kFormat);
    auto rank4 = bytes;
    rank4[5] = 4;
    CHECK(KindOf([&] { kft::Decode(rank4.data(), rank4.size()); }) == ErrorKind::kFormat);
    CHECK(KindOf([&] { kft::Decode(bytes.data(), bytes.size() - 1); }) == ErrorKind::kTruncation);
    const auto path = dir.path() / "short.kft";
    {
      std::ofstream out(path, std::ios::binary);
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size() - 4));
    }
    CHECK(KindOf([&] { kft::LoadFile(path); }) == ErrorKind::kTruncation);
    CHECK(KindOf([&] { kft::ReadHeader(path); }) == ErrorKind::kTruncation);
  }
}
