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

#ifndef MRTTS_LOSSES_LOSSES_H_
#define MRTTS_LOSSES_LOSSES_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mrtts/autodiff.h"
#include "mrtts/config.h"
#include "mrtts/matrix.h"

namespace mrtts::losses {

struct LossWeights {
  double alpha = 1.0;   // reconstruction
  double beta = 1.0;    // adversarial cycle consistency
  double gamma = 0.02;  // orthogonality
  double delta = 0.01;  // synthesized-sample classification inside the cycle term

  void validate() const;  // UsageError on negative weights
  void read(const KeyValueFile& file);
};

enum class OrthoForm {
  kPerSampleCross,  // mean over items of |e_i . e_j|, i < j
  kBatchFrobenius,  // sum over i != j of ||E_i^T E_j||_F / items
};

inline constexpr double kProbabilityFloor = 1e-12;

// Mean |output - target| over entries where mask != 0 (0 when none).
ad::Var recon_loss(ad::Var output, const Matrix& target, const Matrix& mask);
double recon_loss(const Matrix& target, const Matrix& output,
                  const Matrix& mask);

// One classifier's prediction [items x K] and the true class per item.
struct Prediction {
  ad::Var probabilities;
  std::vector<int> labels;
};
// Cross-entropy summed over predictions and averaged over items, with the
// true-class probability clamped at kProbabilityFloor.
ad::Var cls_loss(std::span<const Prediction> predictions);
double cls_loss(const Matrix& probabilities, std::span<const int> labels);

// paired + unpaired + delta * synthesized; absent parts count as 0.
double adv_cycle_loss(std::optional<double> paired,
                      std::optional<double> unpaired,
                      std::optional<double> synthesized,
                      const LossWeights& weights);

// Embeddings per style dimension, each [items x d].
ad::Var ortho_loss(std::span<const ad::Var> embeddings,
                   OrthoForm form = OrthoForm::kPerSampleCross);
double ortho_loss(const Matrix& e1, const Matrix& e2,
                  OrthoForm form = OrthoForm::kPerSampleCross);

struct LossReport {
  double recon = 0.0;
  double cls_paired = 0.0;
  double cls_unpaired = 0.0;
  double cls_synthesized = 0.0;
  double adv_cycle = 0.0;
  double ortho = 0.0;
  double total = 0.0;   // alpha recon + beta adv_cycle + gamma ortho
  double stop = 0.0;    // stop-token BCE, optimised alongside total
  double game = 0.0;    // fine-tune generator term (0 in the main stage)
  double objective = 0.0;  // what the optimiser minimised
  // Real-embedding cross-entropy per classifier (i, j).
  std::map<std::pair<int, int>, double> per_classifier;
};

// Weighted sum; throws NumericalError naming the first non-finite part.
double total_loss(const LossReport& parts, const LossWeights& weights);

}  // namespace mrtts::losses

#endif  // MRTTS_LOSSES_LOSSES_H_
