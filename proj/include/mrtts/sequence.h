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
#ifndef MRTTS_SEQUENCE_H_
#define MRTTS_SEQUENCE_H_

#include <span>
#include <vector>

#include "mrtts/matrix.h"

namespace mrtts {

// Variable-length frame sequences padded to a common length and stacked
// item-major: rows [b * steps, (b + 1) * steps) belong to item b, and frames
// at or past lengths[b] are zero.
struct PaddedSequence {
  Matrix data;
  int items = 0;
  int steps = 0;
  std::vector<int> lengths;

  // items*steps x cols validity mask (1 = real frame).
  Matrix mask(int cols) const;
  int valid_frames() const;
  // Copies item b's valid frames out.
  Matrix item(int b) const;
};

// Pads `sequences` (each frames x channels) to max(length, min_steps) frames,
// rounded up to a multiple of `multiple`.
PaddedSequence pad_sequences(std::span<const Matrix* const> sequences,
                             int multiple = 1, int min_steps = 1);

// Token ids padded with 0; lengths give the real token counts.
struct TokenBatch {
  std::vector<int> ids;
  int items = 0;
  int steps = 0;
  std::vector<int> lengths;
};

TokenBatch pad_tokens(std::span<const std::vector<int>* const> sequences);

}  // namespace mrtts

#endif  // MRTTS_SEQUENCE_H_
