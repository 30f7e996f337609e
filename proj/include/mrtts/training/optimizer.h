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

#ifndef MRTTS_TRAINING_OPTIMIZER_H_
#define MRTTS_TRAINING_OPTIMIZER_H_

#include <map>
#include <string>

#include "mrtts/autodiff.h"
#include "mrtts/model/checkpoint.h"

namespace mrtts::training {

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-6;
};

// Adam with per-parameter moment buffers keyed by parameter name.
class Adam {
 public:
  explicit Adam(AdamSettings settings = {}) : settings_(settings) {}

  void step(ad::ParameterStore& store, double learning_rate);
  long long steps() const { return t_; }

  void save(const std::string& prefix, model::Archive& archive) const;
  void load(const std::string& prefix, const model::Archive& archive,
            const ad::ParameterStore& store);

 private:
  struct Moments {
    Matrix m;
    Matrix v;
  };
  AdamSettings settings_;
  std::map<std::string, Moments> moments_;
  long long t_ = 0;
};

// Scales all gradients so their joint L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_grad_norm(ad::ParameterStore& store, double max_norm);

}  // namespace mrtts::training

#endif  // MRTTS_TRAINING_OPTIMIZER_H_
