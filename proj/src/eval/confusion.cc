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

#include "mrtts/eval/confusion.h"

#include <stdexcept>

namespace mrtts::eval {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : classes(std::move(class_names)),
      counts(classes.size(), std::vector<int>(classes.size(), 0)) {}

void ConfusionMatrix::add(int truth, int predicted) {
  const int k = static_cast<int>(classes.size());
  if (truth < 0 || truth >= k || predicted < 0 || predicted >= k) {
    throw std::out_of_range("confusion matrix: class index out of range");
  }
  ++counts[truth][predicted];
}

int ConfusionMatrix::total() const {
  int n = 0;
  for (std::size_t t = 0; t < counts.size(); ++t) n += row_total(t);
  return n;
}

int ConfusionMatrix::correct() const {
  int n = 0;
  for (std::size_t t = 0; t < counts.size(); ++t) n += counts[t][t];
  return n;
}

int ConfusionMatrix::row_total(int truth) const {
  int n = 0;
  for (int c : counts.at(truth)) n += c;
  return n;
}

double ConfusionMatrix::accuracy() const {
  const int n = total();
  return n == 0 ? 0.0 : static_cast<double>(correct()) / n;
}

double ConfusionMatrix::rate(int truth, int predicted) const {
  const int n = row_total(truth);
  return n == 0 ? 0.0 : static_cast<double>(counts[truth][predicted]) / n;
}

nlohmann::ordered_json ConfusionMatrix::to_json() const {
  nlohmann::ordered_json j;
  j["classes"] = classes;
  j["counts"] = counts;
  j["accuracy"] = accuracy();
  return j;
}

}  // namespace mrtts::eval
