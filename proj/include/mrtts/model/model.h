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

#ifndef MRTTS_MODEL_MODEL_H_
#define MRTTS_MODEL_MODEL_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mrtts/autodiff.h"
#include "mrtts/config.h"
#include "mrtts/corpus/manifest.h"
#include "mrtts/nn/layers.h"
#include "mrtts/sequence.h"

namespace mrtts::model {

struct ModelConfig {
  std::vector<std::string> vocabulary;
  std::vector<corpus::StyleDimension> dimensions;
  int mel_bins = 40;
  int embed_dim = 32;
  int encoder_dim = 64;          // BiGRU output, split across directions
  int encoder_conv_layers = 2;
  int encoder_kernel = 5;
  int ref_conv_layers = 4;
  int ref_channels = 32;
  int ref_kernel = 3;
  int ref_rnn_dim = 32;
  int style_dim = 32;            // per dimension
  int classifier_hidden = 64;
  int prenet_dim = 64;
  double prenet_dropout = 0.5;
  int attention_rnn_dim = 64;
  int decoder_rnn_dim = 64;
  int attention_dim = 32;
  int location_filters = 8;
  int location_kernel = 7;
  int reduction = 8;
  double reversal_lambda = 1.0;
  int max_steps_per_token = 4;   // free-running cap, in decoder steps

  int vocab_size() const { return static_cast<int>(vocabulary.size()); }
  int dimension_count() const { return static_cast<int>(dimensions.size()); }
  int class_count(int d) const {
    return static_cast<int>(dimensions[d].classes.size());
  }

  // Throws UsageError unless every size is positive and odd kernels are odd.
  void validate() const;
  // Reads the "model." keys; vocabulary and dimensions come from the corpus.
  void read(const KeyValueFile& file);
  void write(KeyValueFile& file) const;
};

// Train-time behaviour toggles for a forward pass.
struct Mode {
  bool training = false;
  std::mt19937_64* rng = nullptr;   // dropout masks; required when training
};

// Token positions [lo, hi] the attention may use when its previous maximum
// was at `prev_argmax`, clamped to a sequence of `length` tokens.
struct WindowBounds {
  int lo = 0;
  int hi = 0;
};
WindowBounds window_bounds(int prev_argmax, int window, int length);

struct DecodeOptions {
  // > 0: at each step the attention is restricted to tokens within `window`
  // of the previous step's argmax (first step: position 0).
  int attention_window = 0;
};

struct DecoderOutput {
  ad::Var mel;                 // [items*steps*reduction x mel_bins]
  ad::Var stop_logits;         // [items x steps]
  int items = 0;
  int steps = 0;               // decoder steps run
  int reduction = 1;
  std::vector<int> frames;     // per item: emitted frames (free-running)
  std::vector<bool> truncated; // per item: step cap reached before a stop
  std::vector<Matrix> attention;  // per item: steps x tokens(item)

  int frames_per_item() const { return steps * reduction; }
};

class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  ad::ParameterStore& params() { return params_; }
  const ad::ParameterStore& params() const { return params_; }

  // [items*steps x encoder_dim]; throws DataError for ids outside the
  // vocabulary, naming item and position.
  ad::Var encode_text(ad::Tape& tape, const TokenBatch& text,
                      const Mode& mode) const;

  // mel rows item-major [items*steps x mel_bins] -> [items x style_dim].
  ad::Var encode_reference(ad::Tape& tape, int dimension, ad::Var mel,
                           int items, int steps, std::span<const int> lengths,
                           const Mode& mode) const;
  ad::Var encode_reference(ad::Tape& tape, int dimension,
                           const PaddedSequence& mel, const Mode& mode) const;

  // Class probabilities of Cls_{i,j} [items x K_j]. For i != j the input
  // passes through gradient reversal with the configured lambda, or with
  // `lambda_override` when it is >= 0.
  ad::Var classify(ad::Tape& tape, ad::Var embedding, int i, int j,
                   double lambda_override = -1.0) const;
  // Same classifier without the reversal layer.
  ad::Var classify_plain(ad::Tape& tape, ad::Var embedding, int i,
                         int j) const;

  // Teacher-forced decoding over `teacher` (frames padded to a multiple of
  // the reduction factor).
  DecoderOutput decode_teacher(ad::Tape& tape, ad::Var memory,
                               const TokenBatch& text,
                               std::span<const ad::Var> styles,
                               const PaddedSequence& teacher,
                               const Mode& mode) const;

  // Free-running decoding until each item's stop probability exceeds 0.5 or
  // it reaches max_steps_per_token * tokens steps.
  DecoderOutput decode_free(ad::Tape& tape, ad::Var memory,
                            const TokenBatch& text,
                            std::span<const ad::Var> styles, const Mode& mode,
                            const DecodeOptions& options = {}) const;

 private:
  struct Classifier {
    nn::Linear hidden;
    nn::Linear out;
  };
  struct DecoderState;

  ad::Var prenet(ad::Tape& tape, ad::Var frame, const Mode& mode) const;
  ad::Var dropout(ad::Tape& tape, ad::Var x, double rate,
                  const Mode& mode) const;
  ad::Var masked(ad::Var x, int items, int steps,
                 std::span<const int> lengths) const;
  DecoderOutput run_decoder(ad::Tape& tape, ad::Var memory,
                            const TokenBatch& text,
                            std::span<const ad::Var> styles,
                            const PaddedSequence* teacher, const Mode& mode,
                            const DecodeOptions& options) const;

  ModelConfig config_;
  ad::ParameterStore params_;

  nn::Embedding embedding_;
  std::vector<nn::Conv1d> encoder_convs_;
  nn::GruCell encoder_fwd_, encoder_bwd_;
  std::vector<nn::ReferenceEncoder> references_;
  std::vector<std::vector<Classifier>> classifiers_;  // [i][j]

  nn::Linear prenet1_, prenet2_;
  nn::GruCell attention_rnn_;
  nn::Linear query_, memory_key_, location_conv_, location_dense_, energy_;
  nn::GruCell decoder_rnn_;
  nn::Linear frame_out_, stop_out_;
};

}  // namespace mrtts::model

#endif  // MRTTS_MODEL_MODEL_H_
