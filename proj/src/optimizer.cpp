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

#include "sceneforge/optimizer.hpp"

#include <cmath>

#include "sceneforge/error.hpp"

namespace sceneforge {

bool TrainState::operator==(const TrainState& o) const {
  if (epoch != o.epoch || step != o.step || best_metric != o.best_metric ||
      best_epoch != o.best_epoch || patience_counter != o.patience_counter ||
      rng_state != o.rng_state || moments.size() != o.moments.size()) {
    return false;
  }
  for (const auto& [name, m] : moments) {
    auto it = o.moments.find(name);
    if (it == o.moments.end() || !(it->second.m == m.m) || !(it->second.v == m.v)) return false;
  }
  return true;
}

void AdamWStep(ParameterStore& store, TrainState& state, const AdamOptions& opt) {
  Require(store.grads_ready(), ErrorKind::kContract,
          "optimizer step without gradients; run a backward pass first");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(opt.beta1, t);
  const double correct2 = 1.0 - std::pow(opt.beta2, t);
  const double decay = 1.0 - opt.lr * opt.weight_decay;
  for (auto& [name, p] : store.entries()) {
    if (!p.trainable) continue;
    auto it = state.moments.find(name);
    if (it == state.moments.end()) {
      it = state.moments.emplace(name, AdamMoments{Tensor(p.value.dims(), 0.0), Tensor(p.value.dims(), 0.0)})
               .first;
    }
    Require(it->second.m.dims() == p.value.dims(), ErrorKind::kContract,
            "optimizer moments for " + name + " have the wrong shape");
    double* theta = p.value.data().data();
    const double* g = p.grad.data().data();
    double* m = it->second.m.data().data();
    double* v = it->second.v.data().data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      theta[i] *= decay;
      theta[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
    }
  }
  store.ClearGradsReady();
}

}  // namespace sceneforge
