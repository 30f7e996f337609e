// Copyright (c) 2026 The mrtts Authors
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

#include "mrtts/training/optimizer.h"

#include <cmath>

#include "mrtts/errors.h"

namespace mrtts::training {

void Adam::step(ad::ParameterStore& store, double lr) {
  ++t_;
  const double b1 = settings_.beta1, b2 = settings_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (ad::Parameter* p : store.all()) {
    auto [it, fresh] = moments_.try_emplace(p->name);
    Moments& mo = it->second;
    if (fresh) {
      mo.m = Matrix(p->value.rows(), p->value.cols());
      mo.v = Matrix(p->value.rows(), p->value.cols());
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      mo.m[i] = b1 * mo.m[i] + (1.0 - b1) * g;
      mo.v[i] = b2 * mo.v[i] + (1.0 - b2) * g * g;
      p->value[i] -=
          lr * (mo.m[i] / c1) / (std::sqrt(mo.v[i] / c2) + settings_.epsilon);
    }
  }
}

void Adam::save(const std::string& prefix, model::Archive& a) const {
  for (const auto& [name, mo] : moments_) {
    a.tensors[prefix + "m/" + name] = mo.m;
    a.tensors[prefix + "v/" + name] = mo.v;
  }
  a.meta[prefix + "t"] = t_;
}

void Adam::load(const std::string& prefix, const model::Archive& a,
                const ad::ParameterStore& store) {
  moments_.clear();
  t_ = a.meta.value(prefix + "t", 0LL);
  for (const ad::Parameter* p : store.all()) {
    const auto m = a.tensors.find(prefix + "m/" + p->name);
    const auto v = a.tensors.find(prefix + "v/" + p->name);
    if (m == a.tensors.end() || v == a.tensors.end()) {
      if (t_ == 0) continue;
      throw DataError("checkpoint lacks optimizer state for " + p->name);
    }
    moments_[p->name] = {m->second, v->second};
  }
}

double clip_grad_norm(ad::ParameterStore& store, double max_norm) {
  double sq = 0.0;
  for (const ad::Parameter* p : store.all()) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) sq += p->grad[i] * p->grad[i];
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (ad::Parameter* p : store.all()) {
      for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] *= s;
    }
  }
  return norm;
}

}  // namespace mrtts::training
