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

#ifndef MRTTS_CORPUS_GENERATOR_H_
#define MRTTS_CORPUS_GENERATOR_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mrtts/config.h"
#include "mrtts/corpus/manifest.h"

namespace mrtts::corpus {

// Layout of a synthetic two-dimension corpus. Dimension 0 classes get
// distinct spectral envelopes (voices), dimension 1 classes get distinct
// amplitude contours. counts[c0][c1] utterances are generated per cell; a
// zero count leaves the cell empty.
struct CorpusSpec {
  std::vector<StyleDimension> dimensions;
  std::vector<std::vector<int>> counts;
  int vocab_size = 16;
  int min_tokens = 5;
  int max_tokens = 15;
  double token_seconds = 0.2;
  double test_fraction = 0.1;
  dsp::DspConfig dsp;

  // Keys: dimensions, <dim>.classes, cell.<class0>.<class1>, vocab_size,
  // min_tokens, max_tokens, token_seconds, test_fraction, sample_rate.
  static CorpusSpec from_config(const KeyValueFile& file);
  // Throws UsageError on bad counts or a class left without utterances.
  void validate() const;
  std::vector<std::string> vocabulary() const;
};

// Number of voices / contours the renderer knows.
inline constexpr int kMaxVoices = 4;
inline constexpr int kMaxContours = 4;

// Renders one utterance. `tokens` are vocabulary indices, each lasting
// token_seconds.
std::vector<double> render_utterance(const CorpusSpec& spec,
                                     const std::vector<int>& tokens,
                                     int class0, int class1,
                                     std::mt19937_64& rng);

// Writes <out_dir>/wav/*.wav and <out_dir>/manifest.jsonl. Deterministic in
// (spec, seed).
CorpusManifest generate_synthetic_corpus(const CorpusSpec& spec,
                                         std::uint64_t seed,
                                         const std::string& out_dir);

}  // namespace mrtts::corpus

#endif  // MRTTS_CORPUS_GENERATOR_H_
