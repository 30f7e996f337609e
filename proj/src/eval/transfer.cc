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

#include "mrtts/eval/transfer.h"

#include <spdlog/spdlog.h>

#include <random>

#include "mrtts/errors.h"
#include "mrtts/inference/synthesize.h"

namespace mrtts::eval {

int TransferResult::truncated() const {
  int n = 0;
  for (const auto& s : samples) n += s.truncated;
  return n;
}

nlohmann::ordered_json TransferResult::to_json() const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy;
  j["restricted_classes"] = restricted_classes;
  j["samples"] = samples.size();
  j["truncated"] = truncated();
  auto& cms = j["confusion"] = nlohmann::ordered_json::array();
  for (const auto& cm : confusion) cms.push_back(cm.to_json());
  auto& list = j["syntheses"] = nlohmann::ordered_json::array();
  for (const auto& s : samples) {
    list.push_back({{"text", s.text_id},
                    {"style_reference", s.style_ref_id},
                    {"target", s.target},
                    {"predicted", s.predicted},
                    {"truncated", s.truncated}});
  }
  return j;
}

std::vector<int> restricted_classes(const corpus::CorpusManifest& manifest) {
  std::vector<int> out;
  for (std::size_t a = 0; a < manifest.disjointness_map.size(); ++a) {
    int present = 0;
    for (bool p : manifest.disjointness_map[a]) present += p;
    if (present == 1) out.push_back(static_cast<int>(a));
  }
  return out;
}

TransferResult transfer_accuracy(
    const model::Model& model, const dsp::DspConfig& dsp,
    std::span<const StyleClassifier* const> classifiers,
    const corpus::Corpus& test, const TransferOptions& options) {
  const auto& manifest = test.manifest;
  if (manifest.dimensions.size() != 2) {
    throw DataError("transfer evaluation needs exactly two style dimensions");
  }
  if (classifiers.size() != 2) {
    throw UsageError("transfer evaluation needs one classifier per dimension");
  }
  for (int d = 0; d < 2; ++d) {
    if (classifiers[d]->labels().classes != manifest.dimensions[d].classes) {
      throw DataError("classifier " + std::to_string(d + 1) +
                      " was trained on different class names");
    }
    if (classifiers[d]->mel_bins() != dsp.mel_bins) {
      throw DataError("classifier " + std::to_string(d + 1) +
                      " expects a different number of mel bins");
    }
  }
  const int styles = manifest.class_count(1);

  TransferResult result;
  result.restricted_classes = restricted_classes(manifest);
  if (result.restricted_classes.empty()) {
    throw DataError("no restricted class: every " +
                    manifest.dimensions[0].name + " has several " +
                    manifest.dimensions[1].name + " classes");
  }
  std::vector<bool> restricted(manifest.class_count(0), false);
  for (int c : result.restricted_classes) restricted[c] = true;

  // reference pools: test utterances of unrestricted dimension-0 classes
  std::vector<std::vector<int>> pool(styles);
  std::vector<int> texts;
  for (int pos = 0; pos < test.size(); ++pos) {
    if (restricted[test.label(pos, 0)]) {
      texts.push_back(pos);
    } else {
      pool[test.label(pos, 1)].push_back(pos);
    }
  }
  for (int k = 0; k < styles; ++k) {
    if (pool[k].empty()) {
      throw DataError("test split has no unrestricted utterance of class '" +
                      manifest.dimensions[1].classes[k] + "'");
    }
  }
  if (texts.empty()) {
    throw DataError("test split has no utterance of a restricted class");
  }
  if (options.max_texts > 0 &&
      static_cast<int>(texts.size()) > options.max_texts) {
    texts.resize(options.max_texts);
  }

  for (int d = 0; d < 2; ++d) {
    result.confusion.emplace_back(manifest.dimensions[d].classes);
  }
  std::mt19937_64 rng(options.seed);
  inference::SynthesisOptions synth;
  synth.attention_window = options.attention_window;
  synth.vocode = options.vocode;
  std::vector<Matrix> outputs;
  for (int pos : texts) {
    for (int k = 0; k < styles; ++k) {
      std::uniform_int_distribution<std::size_t> pick(0, pool[k].size() - 1);
      const int ref = pool[k][pick(rng)];
      const std::vector<Matrix> refs = {test.mels[pos], test.mels[ref]};
      const auto s = inference::synthesize_from_mels(model, test.tokens[pos],
                                                     refs, dsp, synth);
      outputs.push_back(options.vocode
                            ? inference::reference_mel(s.waveform, dsp)
                            : s.mel);
      TransferSample sample;
      sample.text_id = test.record(pos).utt_id;
      sample.style_ref_id = test.record(ref).utt_id;
      sample.target = {test.label(pos, 0), k};
      sample.truncated = s.truncated;
      result.samples.push_back(std::move(sample));
    }
  }
  for (int d = 0; d < 2; ++d) {
    const auto predicted = classifiers[d]->predict(outputs);
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      result.samples[i].predicted.push_back(predicted[i]);
      result.confusion[d].add(result.samples[i].target[d], predicted[i]);
    }
    result.accuracy.push_back(result.confusion[d].accuracy());
  }
  result.style_embeddings = classifiers[1]->embed(outputs);
  for (const auto& s : result.samples) result.style_labels.push_back(s.target[1]);
  if (result.truncated() > 0) {
    spdlog::warn("{} of {} syntheses hit the step cap", result.truncated(),
                 result.samples.size());
  }
  return result;
}

}  // namespace mrtts::eval
