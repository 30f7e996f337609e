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

#ifndef MRTTS_EVAL_TRANSFER_H_
#define MRTTS_EVAL_TRANSFER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mrtts/corpus/dataset.h"
#include "mrtts/dsp/spectrogram.h"
#include "mrtts/eval/classifier.h"
#include "mrtts/eval/confusion.h"
#include "mrtts/model/model.h"

namespace mrtts::eval {

struct TransferOptions {
  std::uint64_t seed = 2024;   // reference selection
  int attention_window = 7;
  int max_texts = 0;           // 0: every restricted-class test text
  // Classify the re-analyzed Griffin-Lim waveform (true) or the decoder's
  // mel frames directly.
  bool vocode = true;
};

struct TransferSample {
  std::string text_id;       // utterance supplying text and dimension-0 audio
  std::string style_ref_id;  // utterance supplying the dimension-1 reference
  std::vector<int> target;   // intended class per dimension
  std::vector<int> predicted;
  bool truncated = false;
};

struct TransferResult {
  std::vector<ConfusionMatrix> confusion;  // per dimension
  std::vector<double> accuracy;            // per dimension
  std::vector<int> restricted_classes;     // dimension-0 classes probed
  std::vector<TransferSample> samples;
  // Dimension-1 classifier embeddings of the synthesized samples, with the
  // intended dimension-1 class of each row.
  Matrix style_embeddings;
  std::vector<int> style_labels;

  int truncated() const;
  nlohmann::ordered_json to_json() const;
};

// Dimension-0 classes that occur with exactly one dimension-1 class.
std::vector<int> restricted_classes(const corpus::CorpusManifest& manifest);

// For every test text of a restricted dimension-0 class, synthesizes once per
// dimension-1 class, taking the text's own audio as the dimension-0 reference
// and a seeded random test utterance of an unrestricted dimension-0 class as
// the dimension-1 reference, then classifies the result in every dimension.
// `classifiers` holds one classifier per dimension, in dimension order.
TransferResult transfer_accuracy(const model::Model& model,
                                 const dsp::DspConfig& dsp,
                                 std::span<const StyleClassifier* const> classifiers,
                                 const corpus::Corpus& test,
                                 const TransferOptions& options = {});

}  // namespace mrtts::eval

#endif  // MRTTS_EVAL_TRANSFER_H_
