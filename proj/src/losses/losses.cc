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

#include "mrtts/losses/losses.h"

#include <cmath>

#include "mrtts/errors.h"

namespace mrtts::losses {

using ad::Tape;
using ad::Var;

void LossWeights::validate() const {
  for (auto [v, name] : {std::pair{alpha, "alpha"}, std::pair{beta, "beta"},
                         std::pair{gamma, "gamma"}, std::pair{delta, "delta"}}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw UsageError(std::string("loss.") + name + " must be >= 0");
    }
  }
}

void LossWeights::read(const KeyValueFile& f) {
  alpha = f.get_double("loss.alpha", alpha);
  beta = f.get_double("loss.beta", beta);
  gamma = f.get_double("loss.gamma", gamma);
  delta = f.get_double("loss.delta", delta);
  validate();
}

Var recon_loss(Var output, const Matrix& target, const Matrix& mask) {
  if (output.rows() != target.rows() || output.cols() != target.cols() ||
      mask.rows() != target.rows() || mask.cols() != target.cols()) {
    throw DataError("recon_loss: shape mismatch (" +
                    std::to_string(output.rows()) + "x" +
                    std::to_string(output.cols()) + " vs " +
                    std::to_string(target.rows()) + "x" +
                    std::to_string(target.cols()) + ")");
  }
  Tape& tape = *output.tape();
  double valid = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) valid += mask[i] != 0.0;
  if (valid == 0.0) return tape.constant(Matrix(1, 1));
  Matrix binary(mask.rows(), mask.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) binary[i] = mask[i] != 0.0;
  Var diff = ad::abs(ad::sub(output, tape.constant(target)));
  return ad::scale(ad::sum_all(ad::mul_const(diff, binary)), 1.0 / valid);
}

double recon_loss(const Matrix& target, const Matrix& output,
                  const Matrix& mask) {
  Tape tape(false);
  return recon_loss(tape.constant(output), target, mask).scalar();
}

Var cls_loss(std::span<const Prediction> predictions) {
  if (predictions.empty()) {
    throw std::invalid_argument("cls_loss: no predictions");
  }
  Tape& tape = *predictions[0].probabilities.tape();
  std::vector<Var> terms;
  for (const auto& p : predictions) {
    const int items = p.probabilities.rows();
    const int classes = p.probabilities.cols();
    if (static_cast<int>(p.labels.size()) != items) {
      throw DataError("cls_loss: one label per item required");
    }
    if (items == 0) continue;
    Matrix pick(items, classes);
    for (int b = 0; b < items; ++b) {
      if (p.labels[b] < 0 || p.labels[b] >= classes) {
        throw DataError("cls_loss: label " + std::to_string(p.labels[b]) +
                        " outside " + std::to_string(classes) + " classes");
      }
      pick(b, p.labels[b]) = 1.0;
    }
    Var chosen = ad::sum_all(ad::mul_const(
        ad::log_clamped(p.probabilities, kProbabilityFloor), pick));
    terms.push_back(ad::scale(chosen, -1.0 / items));
  }
  if (terms.empty()) return tape.constant(Matrix(1, 1));
  Var sum = terms[0];
  for (std::size_t k = 1; k < terms.size(); ++k) sum = ad::add(sum, terms[k]);
  return sum;
}

double cls_loss(const Matrix& probabilities, std::span<const int> labels) {
  Tape tape(false);
  const Prediction p{tape.constant(probabilities),
                     std::vector<int>(labels.begin(), labels.end())};
  return cls_loss(std::span<const Prediction>(&p, 1)).scalar();
}

double adv_cycle_loss(std::optional<double> paired,
                      std::optional<double> unpaired,
                      std::optional<double> synthesized,
                      const LossWeights& w) {
  return paired.value_or(0.0) + unpaired.value_or(0.0) +
         w.delta * synthesized.value_or(0.0);
}

Var ortho_loss(std::span<const Var> e, OrthoForm form) {
  if (e.size() < 2) throw std::invalid_argument("ortho_loss: need two sets");
  Tape& tape = *e[0].tape();
  const int items = e[0].rows();
  for (const Var& v : e) {
    if (v.rows() != items) {
      throw DataError("ortho_loss: embedding batches differ in size");
    }
  }
  if (items == 0) return tape.constant(Matrix(1, 1));
  std::vector<Var> terms;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = 0; j < e.size(); ++j) {
      if (form == OrthoForm::kPerSampleCross) {
        if (j <= i) continue;
        terms.push_back(ad::mean_all(ad::abs(ad::row_dot(e[i], e[j]))));
      } else {
        if (j == i) continue;
        Var gram = ad::matmul(ad::transpose(e[i]), e[j]);
        terms.push_back(ad::scale(
            ad::sqrt(ad::sum_all(ad::mul(gram, gram)), 0.0), 1.0 / items));
      }
    }
  }
  Var sum = terms[0];
  for (std::size_t k = 1; k < terms.size(); ++k) sum = ad::add(sum, terms[k]);
  return sum;
}

double ortho_loss(const Matrix& e1, const Matrix& e2, OrthoForm form) {
  Tape tape(false);
  const Var vars[2] = {tape.constant(e1), tape.constant(e2)};
  return ortho_loss(vars, form).scalar();
}

double total_loss(const LossReport& p, const LossWeights& w) {
  for (auto [v, name] : {std::pair{p.recon, "recon"},
                         std::pair{p.adv_cycle, "adv_cycle"},
                         std::pair{p.ortho, "ortho"}}) {
    if (!std::isfinite(v)) {
      throw NumericalError(name, std::string("non-finite ") + name +
                                     " loss term");
    }
  }
  return w.alpha * p.recon + w.beta * p.adv_cycle + w.gamma * p.ortho;
}

}  // namespace mrtts::losses
