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

#ifndef MRTTS_EVAL_CONFUSION_H_
#define MRTTS_EVAL_CONFUSION_H_

#include <string>
#include <vector>

#include "json.hpp"

namespace mrtts::eval {

// counts[true][predicted].
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<int>> counts;

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> class_names);

  void add(int truth, int predicted);
  int total() const;
  int correct() const;
  int row_total(int truth) const;
  // correct / total; 0 when empty.
  double accuracy() const;
  // Share of class `truth`'s samples predicted as `predicted`.
  double rate(int truth, int predicted) const;

  nlohmann::ordered_json to_json() const;
};

}  // namespace mrtts::eval

#endif  // MRTTS_EVAL_CONFUSION_H_
