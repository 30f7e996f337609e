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

#ifndef MRTTS_CORPUS_DATASET_H_
#define MRTTS_CORPUS_DATASET_H_

#include <random>
#include <string>
#include <vector>

#include "mrtts/corpus/manifest.h"
#include "mrtts/matrix.h"
#include "mrtts/sequence.h"

namespace mrtts::corpus {

// Manifest plus decoded model inputs: log-compressed mel frames and token ids
// for every record in the selected split.
struct Corpus {
  CorpusManifest manifest;
  std::vector<int> records;              // manifest indices in this view
  std::vector<Matrix> mels;              // parallel to `records`
  std::vector<std::vector<int>> tokens;  // parallel to `records`
  // by_class[d][c]: positions in `records` whose class in dimension d is c.
  std::vector<std::vector<std::vector<int>>> by_class;

  int size() const { return static_cast<int>(records.size()); }
  int dimensions() const {
    return static_cast<int>(manifest.dimensions.size());
  }
  const UtteranceRecord& record(int pos) const {
    return manifest.records[records[pos]];
  }
  int label(int pos, int dimension) const {
    return record(pos).labels[dimension];
  }
};

// Maps symbols to vocabulary ids. Throws DataError naming the first unknown
// symbol and its position.
std::vector<int> token_ids(const std::vector<std::string>& vocabulary,
                           const std::vector<std::string>& symbols);

// Analyzes the audio of every record whose split matches (empty = all).
// Throws DataError if a decoded length disagrees with duration_frames.
Corpus load_corpus(const CorpusManifest& manifest, const std::string& split);

// Builds a view from already decoded features (tests, in-memory corpora).
Corpus make_corpus(CorpusManifest manifest, std::vector<Matrix> mels);

enum class Pairing { kPaired, kUnpaired };

// A text and one reference per style dimension. Positions index the corpus.
struct Triplet {
  int text = 0;
  std::vector<int> refs;
  // ref_labels[n][j]: class of reference n in dimension j.
  std::vector<std::vector<int>> ref_labels;
  Pairing pairing = Pairing::kUnpaired;
  int paired_form = -1;     // dimension holding the text's own audio
  bool fallback = false;    // style-matched sample had to reuse the text audio

  bool has_target() const { return pairing == Pairing::kPaired; }
};

// Paired triplet: a random utterance u, its own audio in one dimension
// (chosen with probability 1/2 each for two dimensions) and, in every other
// dimension, a different utterance of u's class there. Cells with a single
// utterance fall back to u's audio and log a warning.
Triplet sample_paired_triplet(const Corpus& corpus, std::mt19937_64& rng);

// Unpaired triplet: random text and independent uniform references.
Triplet sample_unpaired_triplet(const Corpus& corpus, std::mt19937_64& rng);

// Padded, aligned model inputs. Paired triplets come first.
struct Batch {
  std::vector<Triplet> triplets;
  int n_paired = 0;
  int n_unpaired = 0;
  TokenBatch text;                        // all triplets
  std::vector<PaddedSequence> refs;       // per dimension, all triplets
  PaddedSequence targets;                 // paired triplets only
  // labels[n][j][item]: class in dimension j of item's reference n.
  std::vector<std::vector<std::vector<int>>> labels;

  int size() const { return n_paired + n_unpaired; }
};

// n_pairs paired plus n_pairs unpaired triplets (none when
// `with_unpaired` is false). Target frames are padded to a multiple of
// `frame_multiple`.
Batch make_batch(const Corpus& corpus, std::mt19937_64& rng, int n_pairs,
                 bool with_unpaired = true, int frame_multiple = 1);

Batch collate(const Corpus& corpus, std::vector<Triplet> triplets,
              int frame_multiple = 1);

}  // namespace mrtts::corpus

#endif  // MRTTS_CORPUS_DATASET_H_
