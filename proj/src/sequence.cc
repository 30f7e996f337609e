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
#include "mrtts/sequence.h"

#include <algorithm>
#include <stdexcept>

namespace mrtts {

Matrix PaddedSequence::mask(int cols) const {
  Matrix m(items * steps, cols);
  for (int b = 0; b < items; ++b) {
    for (int t = 0; t < lengths[b]; ++t) {
      for (int c = 0; c < cols; ++c) m(b * steps + t, c) = 1.0;
    }
  }
  return m;
}

int PaddedSequence::valid_frames() const {
  int n = 0;
  for (int len : lengths) n += len;
  return n;
}

Matrix PaddedSequence::item(int b) const {
  Matrix out(lengths[b], data.cols());
  for (int t = 0; t < lengths[b]; ++t) {
    std::copy(data.row(b * steps + t).begin(), data.row(b * steps + t).end(),
              out.row(t).begin());
  }
  return out;
}

PaddedSequence pad_sequences(std::span<const Matrix* const> sequences,
                             int multiple, int min_steps) {
  if (sequences.empty()) throw std::invalid_argument("pad_sequences: empty");
  PaddedSequence out;
  out.items = static_cast<int>(sequences.size());
  const int cols = sequences[0]->cols();
  int steps = min_steps;
  for (const Matrix* s : sequences) {
    if (s->cols() != cols) {
      throw std::invalid_argument("pad_sequences: channel counts differ");
    }
    steps = std::max(steps, s->rows());
    out.lengths.push_back(s->rows());
  }
  steps = (steps + multiple - 1) / multiple * multiple;
  out.steps = steps;
  out.data = Matrix(out.items * steps, cols);
  for (int b = 0; b < out.items; ++b) {
    const Matrix& s = *sequences[b];
    std::copy(s.data(), s.data() + s.size(),
              out.data.data() + static_cast<std::size_t>(b) * steps * cols);
  }
  return out;
}

TokenBatch pad_tokens(std::span<const std::vector<int>* const> sequences) {
  TokenBatch out;
  out.items = static_cast<int>(sequences.size());
  for (const auto* s : sequences) {
    out.steps = std::max(out.steps, static_cast<int>(s->size()));
    out.lengths.push_back(static_cast<int>(s->size()));
  }
  out.ids.assign(static_cast<std::size_t>(out.items) * out.steps, 0);
  for (int b = 0; b < out.items; ++b) {
    std::copy(sequences[b]->begin(), sequences[b]->end(),
              out.ids.begin() + static_cast<std::ptrdiff_t>(b) * out.steps);
  }
  return out;
}

}  // namespace mrtts
