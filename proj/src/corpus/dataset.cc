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

#include "mrtts/corpus/dataset.h"

#include <spdlog/spdlog.h>

#include "mrtts/dsp/wav.h"
#include "mrtts/errors.h"

namespace mrtts::corpus {

std::vector<int> token_ids(const std::vector<std::string>& vocabulary,
                           const std::vector<std::string>& symbols) {
  std::vector<int> ids;
  ids.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const auto it = std::find(vocabulary.begin(), vocabulary.end(), symbols[i]);
    if (it == vocabulary.end()) {
      throw DataError("unknown token '" + symbols[i] + "' at position " +
                      std::to_string(i));
    }
    ids.push_back(static_cast<int>(it - vocabulary.begin()));
  }
  return ids;
}

namespace {

void index_classes(Corpus& c) {
  const int dims = c.dimensions();
  c.by_class.assign(dims, {});
  for (int d = 0; d < dims; ++d) {
    c.by_class[d].assign(c.manifest.class_count(d), {});
  }
  for (int pos = 0; pos < c.size(); ++pos) {
    for (int d = 0; d < dims; ++d) c.by_class[d][c.label(pos, d)].push_back(pos);
  }
}

}  // namespace

Corpus load_corpus(const CorpusManifest& manifest, const std::string& split) {
  std::vector<Matrix> mels;
  std::vector<int> keep;
  for (int i = 0; i < static_cast<int>(manifest.records.size()); ++i) {
    const auto& r = manifest.records[i];
    if (!split.empty() && r.split != split) continue;
    const dsp::Waveform wave = dsp::read_wav(manifest.audio_file(r));
    if (wave.sample_rate != manifest.dsp.sample_rate) {
      throw DataError(r.utt_id + ": sample rate " +
                      std::to_string(wave.sample_rate) + " does not match " +
                      std::to_string(manifest.dsp.sample_rate));
    }
    auto mel = dsp::log_compress(dsp::analyze(wave.samples, manifest.dsp).mel);
    if (mel.frames() != r.duration_frames) {
      throw DataError(r.utt_id + ": decoded " + std::to_string(mel.frames()) +
                      " frames, manifest says " +
                      std::to_string(r.duration_frames));
    }
    mels.push_back(std::move(mel.values));
    keep.push_back(i);
  }
  if (keep.empty()) {
    throw DataError("no records in split '" + split + "'");
  }
  Corpus c;
  c.manifest = manifest;
  c.records = std::move(keep);
  c.mels = std::move(mels);
  for (int i : c.records) {
    c.tokens.push_back(
        token_ids(manifest.vocabulary, manifest.records[i].tokens));
  }
  index_classes(c);
  return c;
}

Corpus make_corpus(CorpusManifest manifest, std::vector<Matrix> mels) {
  if (mels.size() != manifest.records.size()) {
    throw DataError("make_corpus: one feature matrix per record required");
  }
  Corpus c;
  c.manifest = std::move(manifest);
  c.mels = std::move(mels);
  for (int i = 0; i < static_cast<int>(c.manifest.records.size()); ++i) {
    c.records.push_back(i);
    c.tokens.push_back(token_ids(c.manifest.vocabulary,
                                 c.manifest.records[i].tokens));
  }
  index_classes(c);
  return c;
}

namespace {

std::vector<std::vector<int>> labels_of(const Corpus& c,
                                        const std::vector<int>& refs) {
  std::vector<std::vector<int>> out(refs.size());
  for (std::size_t n = 0; n < refs.size(); ++n) {
    for (int j = 0; j < c.dimensions(); ++j) out[n].push_back(c.label(refs[n], j));
  }
  return out;
}

}  // namespace

Triplet sample_paired_triplet(const Corpus& corpus, std::mt19937_64& rng) {
  const int dims = corpus.dimensions();
  std::uniform_int_distribution<int> pick(0, corpus.size() - 1);
  Triplet t;
  t.pairing = Pairing::kPaired;
  t.text = pick(rng);
  t.paired_form = std::uniform_int_distribution<int>(0, dims - 1)(rng);
  t.refs.assign(dims, t.text);
  for (int d = 0; d < dims; ++d) {
    if (d == t.paired_form) continue;
    const auto& pool = corpus.by_class[d][corpus.label(t.text, d)];
    if (pool.size() < 2) {
      spdlog::warn("class '{}' of {} has a single utterance; reusing {} as "
                   "its style-matched sample",
                   corpus.manifest.dimensions[d].classes[corpus.label(t.text, d)],
                   corpus.manifest.dimensions[d].name,
                   corpus.record(t.text).utt_id);
      t.fallback = true;
      continue;
    }
    std::uniform_int_distribution<std::size_t> in_pool(0, pool.size() - 1);
    int pos = t.text;
    while (pos == t.text) pos = pool[in_pool(rng)];
    t.refs[d] = pos;
  }
  t.ref_labels = labels_of(corpus, t.refs);
  return t;
}

Triplet sample_unpaired_triplet(const Corpus& corpus, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, corpus.size() - 1);
  Triplet t;
  t.pairing = Pairing::kUnpaired;
  t.text = pick(rng);
  for (int d = 0; d < corpus.dimensions(); ++d) t.refs.push_back(pick(rng));
  t.ref_labels = labels_of(corpus, t.refs);
  return t;
}

Batch collate(const Corpus& corpus, std::vector<Triplet> triplets,
              int frame_multiple) {
  if (triplets.empty()) throw DataError("collate: empty batch");
  std::stable_partition(triplets.begin(), triplets.end(),
                        [](const Triplet& t) { return t.has_target(); });
  Batch b;
  b.triplets = std::move(triplets);
  for (const auto& t : b.triplets) (t.has_target() ? b.n_paired : b.n_unpaired)++;
  const int dims = corpus.dimensions();

  std::vector<const std::vector<int>*> text;
  for (const auto& t : b.triplets) text.push_back(&corpus.tokens[t.text]);
  b.text = pad_tokens(text);

  for (int n = 0; n < dims; ++n) {
    std::vector<const Matrix*> refs;
    for (const auto& t : b.triplets) refs.push_back(&corpus.mels[t.refs[n]]);
    b.refs.push_back(pad_sequences(refs));
  }
  if (b.n_paired > 0) {
    std::vector<const Matrix*> targets;
    for (int i = 0; i < b.n_paired; ++i) {
      targets.push_back(&corpus.mels[b.triplets[i].text]);
    }
    b.targets = pad_sequences(targets, frame_multiple);
  }
  b.labels.assign(dims, std::vector<std::vector<int>>(dims));
  for (const auto& t : b.triplets) {
    for (int n = 0; n < dims; ++n) {
      for (int j = 0; j < dims; ++j) b.labels[n][j].push_back(t.ref_labels[n][j]);
    }
  }
  return b;
}

Batch make_batch(const Corpus& corpus, std::mt19937_64& rng, int n_pairs,
                 bool with_unpaired, int frame_multiple) {
  if (n_pairs < 1) throw UsageError("make_batch: n_pairs must be >= 1");
  std::vector<Triplet> triplets;
  for (int i = 0; i < n_pairs; ++i) {
    triplets.push_back(sample_paired_triplet(corpus, rng));
  }
  if (with_unpaired) {
    for (int i = 0; i < n_pairs; ++i) {
      triplets.push_back(sample_unpaired_triplet(corpus, rng));
    }
  }
  return collate(corpus, std::move(triplets), frame_multiple);
}

}  // namespace mrtts::corpus
