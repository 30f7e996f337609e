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

#ifndef MRTTS_EVAL_CLASSIFIER_H_
#define MRTTS_EVAL_CLASSIFIER_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mrtts/autodiff.h"
#include "mrtts/config.h"
#include "mrtts/corpus/dataset.h"
#include "mrtts/dsp/spectrogram.h"
#include "mrtts/eval/confusion.h"
#include "mrtts/nn/layers.h"

namespace mrtts::eval {

struct ClassifierConfig {
  int conv_layers = 4;
  int channels = 32;
  int kernel = 3;
  int rnn_dim = 32;
  int embedding_dim = 32;
  int hidden = 64;
  int steps = 600;
  int batch_size = 32;
  double learning_rate = 2e-3;
  double validation_fraction = 0.2;
  std::uint64_t seed = 7;

  void validate() const;
  // Reads "eval.<field>" keys.
  void read(const KeyValueFile& file);
};

// An independent style classifier for one dimension: a reference encoder of
// the synthesizer's shape followed by a two-layer MLP.
class StyleClassifier {
 public:
  StyleClassifier(int dimension, corpus::StyleDimension labels, int mel_bins,
                  const ClassifierConfig& config, std::uint64_t seed);
  StyleClassifier(const StyleClassifier&) = delete;
  StyleClassifier& operator=(const StyleClassifier&) = delete;

  int dimension() const { return dimension_; }
  const corpus::StyleDimension& labels() const { return labels_; }
  int class_count() const { return static_cast<int>(labels_.classes.size()); }
  int mel_bins() const { return mel_bins_; }
  int embedding_dim() const { return encoder_.out_dim(); }
  ad::ParameterStore& params() { return params_; }
  const ad::ParameterStore& params() const { return params_; }

  ad::Var embed(ad::Tape& tape, const PaddedSequence& mels) const;
  // [items x K] class probabilities.
  ad::Var probabilities(ad::Tape& tape, ad::Var embedding) const;

  // Inference helpers over log-compressed mel frames, batched internally.
  Matrix embed(std::span<const Matrix> mels) const;
  Matrix predict_proba(std::span<const Matrix> mels) const;
  std::vector<int> predict(std::span<const Matrix> mels) const;

  // Archive kind "style-classifier"; records the signal settings as well.
  void save(const std::string& path, const dsp::DspConfig& dsp) const;
  static std::unique_ptr<StyleClassifier> load(const std::string& path,
                                               dsp::DspConfig* dsp = nullptr);

 private:
  int dimension_;
  corpus::StyleDimension labels_;
  int mel_bins_;
  ClassifierConfig config_;
  ad::ParameterStore params_;
  nn::ReferenceEncoder encoder_;
  nn::Linear hidden_, out_;
};

struct ClassifierReport {
  int dimension = 0;
  int train_size = 0;
  int validation_size = 0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  ConfusionMatrix validation_confusion;
  std::vector<double> loss_trace;  // per step

  nlohmann::ordered_json to_json() const;
};

struct TrainedClassifier {
  std::unique_ptr<StyleClassifier> classifier;
  ClassifierReport report;
};

// Trains on a stratified split of `corpus` and evaluates on the held-out
// part. Batches draw a class uniformly, then an utterance of that class.
// Throws DataError when the dimension has fewer than two populated classes.
TrainedClassifier train_eval_classifier(const corpus::Corpus& corpus,
                                        int dimension,
                                        const ClassifierConfig& config);

}  // namespace mrtts::eval

#endif  // MRTTS_EVAL_CLASSIFIER_H_
