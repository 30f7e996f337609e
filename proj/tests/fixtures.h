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

#ifndef MRTTS_TESTS_FIXTURES_H_
#define MRTTS_TESTS_FIXTURES_H_

#include <random>
#include <string>
#include <vector>

#include "mrtts/corpus/dataset.h"
#include "mrtts/corpus/generator.h"
#include "mrtts/model/model.h"

namespace mrtts::testing {

// Two speakers, four emotions; the first speaker only has neutral speech.
// counts = {{restricted, 0, 0, 0}, {per_emotion x 4}}.
inline corpus::CorpusSpec table1_spec(int restricted, int per_emotion) {
  corpus::CorpusSpec spec;
  spec.dimensions = {{"speaker", {"spk1", "spk2"}},
                     {"emotion", {"neutral", "sad", "angry", "happy"}}};
  spec.counts = {{restricted, 0, 0, 0},
                 {per_emotion, per_emotion, per_emotion, per_emotion}};
  return spec;
}

// In-memory corpus with the table1 layout and random features; no audio.
inline corpus::Corpus table1_memory_corpus(int restricted, int per_emotion,
                                           std::uint64_t seed = 1,
                                           int mel_bins = 40) {
  const auto spec = table1_spec(restricted, per_emotion);
  corpus::CorpusManifest m;
  m.dimensions = spec.dimensions;
  m.vocabulary = spec.vocabulary();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(2, 5), tok(0, spec.vocab_size - 1);
  std::uniform_int_distribution<int> frames(8, 30);
  std::uniform_real_distribution<double> val(0.0, 1.0);
  std::vector<Matrix> mels;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 4; ++b) {
      for (int i = 0; i < spec.counts[a][b]; ++i) {
        corpus::UtteranceRecord r;
        r.utt_id = spec.dimensions[0].classes[a] + "_" +
                   spec.dimensions[1].classes[b] + "_" + std::to_string(i);
        r.audio_path = "wav/" + r.utt_id + ".wav";
        const int n = len(rng);
        for (int k = 0; k < n; ++k) r.tokens.push_back(m.vocabulary[tok(rng)]);
        r.labels = {a, b};
        r.duration_frames = frames(rng);
        Matrix mel(r.duration_frames, mel_bins);
        for (std::size_t k = 0; k < mel.size(); ++k) mel[k] = val(rng);
        mels.push_back(std::move(mel));
        m.records.push_back(std::move(r));
      }
    }
  }
  corpus::rebuild_disjointness(m);
  return corpus::make_corpus(std::move(m), std::move(mels));
}

// A model small enough for finite differences and fast loops.
inline model::ModelConfig tiny_model_config(const corpus::Corpus& corpus,
                                            int mel_bins = 6) {
  model::ModelConfig c;
  c.vocabulary = corpus.manifest.vocabulary;
  c.dimensions = corpus.manifest.dimensions;
  c.mel_bins = mel_bins;
  c.embed_dim = 6;
  c.encoder_dim = 8;
  c.encoder_conv_layers = 1;
  c.encoder_kernel = 3;
  c.ref_conv_layers = 2;
  c.ref_channels = 4;
  c.ref_rnn_dim = 4;
  c.style_dim = 4;
  c.classifier_hidden = 6;
  c.prenet_dim = 6;
  c.attention_rnn_dim = 8;
  c.decoder_rnn_dim = 8;
  c.attention_dim = 4;
  c.location_filters = 2;
  c.location_kernel = 3;
  c.reduction = 2;
  return c;
}

}  // namespace mrtts::testing

#endif  // MRTTS_TESTS_FIXTURES_H_
