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

#ifndef MRTTS_TRAINING_TRAINER_H_
#define MRTTS_TRAINING_TRAINER_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>

#include "mrtts/config.h"
#include "mrtts/corpus/dataset.h"
#include "mrtts/dsp/spectrogram.h"
#include "mrtts/losses/losses.h"
#include "mrtts/model/model.h"
#include "mrtts/training/optimizer.h"

namespace mrtts::training {

struct TrainConfig {
  int n_pairs = 96;
  int steps = 40000;              // main stage, one batch per step
  bool finetune = true;
  int finetune_steps = 1000;
  double finetune_weight = 0.1;
  double learning_rate = 1e-3;
  double lr_decay_rate = 0.5;     // multiplied in every lr_decay_steps
  int lr_decay_steps = 50000;
  double lr_min = 1e-5;
  AdamSettings adam;
  double grad_clip = 1.0;
  std::uint64_t seed = 1;
  int checkpoint_interval = 1000;
  bool ablate_intercross = false;
  losses::OrthoForm ortho_form = losses::OrthoForm::kPerSampleCross;
  int discriminator_channels = 32;
  losses::LossWeights weights;
  model::ModelConfig model;
  dsp::DspConfig dsp;

  // Reads train.*, loss.*, model.* and dsp.* keys.
  static TrainConfig from_config(const KeyValueFile& file);
  void validate() const;
  KeyValueFile to_config() const;
  double learning_rate_at(int step) const;
  int total_steps() const { return steps + (finetune ? finetune_steps : 0); }
};

// Coefficients actually applied to each term when forming the objective.
struct ObjectiveScales {
  double recon = 1.0;
  double cls_paired = 1.0;
  double cls_unpaired = 1.0;
  double cls_synthesized = 0.01;
  double ortho = 0.02;
  double stop = 1.0;
  double game = 0.0;

  static ObjectiveScales main_stage(const TrainConfig& config);
  static ObjectiveScales finetune_stage(const TrainConfig& config);
};

// Real-vs-synthesized mel critic for the fine-tune stage: two strided
// convolutions, masked mean over time, linear logit.
class Discriminator {
 public:
  Discriminator(int mel_bins, int channels, std::uint64_t seed);
  ad::Var logits(ad::Tape& tape, ad::Var mel, int items, int steps,
                 std::span<const int> lengths) const;
  ad::ParameterStore& params() { return params_; }
  const ad::ParameterStore& params() const { return params_; }

 private:
  ad::ParameterStore params_;
  nn::Conv1d conv1_, conv2_;
  nn::Linear out_;
};

struct TrainState {
  std::unique_ptr<model::Model> model;
  Adam optimizer;
  std::unique_ptr<Discriminator> discriminator;
  Adam discriminator_optimizer;
  int step = 0;                    // optimizer updates applied so far
  std::uint64_t seed = 0;
  double best_total = std::numeric_limits<double>::infinity();
  int best_step = -1;
};

TrainState init_state(const TrainConfig& config,
                      const corpus::CorpusManifest& manifest);
void save_state(const std::string& path, const TrainState& state,
                const TrainConfig& config);
TrainState load_state(const std::string& path);

struct StepResult {
  losses::LossReport report;
  int teacher_forced = 0;   // paired items decoded with teacher forcing
  int reencoded = 0;        // synthesized items passed back through encoders
  // Free-running outputs of the unpaired triplets, item-major
  // [reencoded * steps x mel_bins], with each item's frame count.
  Matrix synthesized;
  std::vector<int> synthesized_frames;
  double grad_norm = 0.0;
  double discriminator_loss = std::numeric_limits<double>::quiet_NaN();
  double discriminator_accuracy = std::numeric_limits<double>::quiet_NaN();
};

// Deterministic generator for step `step` of a run seeded with `seed`.
std::mt19937_64 step_rng(std::uint64_t seed, int step);

// Forward pass over a batch and, with `backward`, gradients of the scaled
// objective left in the model parameters (zeroed first). Throws
// NumericalError before touching gradients when a term is non-finite.
StepResult forward_backward(TrainState& state, const corpus::Batch& batch,
                            const TrainConfig& config,
                            const ObjectiveScales& scales,
                            std::mt19937_64& rng, bool backward = true);

// One main-stage update: forward_backward, clipping, Adam.
StepResult train_step(TrainState& state, const corpus::Batch& batch,
                      const TrainConfig& config, std::mt19937_64& rng);

// One fine-tune update: main-stage terms plus the generator game term, then
// a discriminator update on the same step's real and synthesized frames.
StepResult finetune_step(TrainState& state, const corpus::Batch& batch,
                         const TrainConfig& config, std::mt19937_64& rng);

struct TrainOptions {
  bool resume = true;            // continue from <out>/checkpoint.ckpt
  int stop_after = -1;           // leave early once this step is reached
  std::function<void(int step, const StepResult&)> on_step;
};

struct TrainSummary {
  int final_step = 0;
  double first_total = std::numeric_limits<double>::quiet_NaN();
  double last_total = std::numeric_limits<double>::quiet_NaN();
};

// Runs the main stage then (when enabled) the fine-tune stage, appending one
// JSON record per step to <out>/metrics.jsonl and writing
// <out>/checkpoint.ckpt every checkpoint_interval steps and at the end, plus
// <out>/model.ckpt once all steps are done.
TrainSummary train(const TrainConfig& config, const corpus::Corpus& corpus,
                   const std::string& out_dir, const TrainOptions& options = {});

// Runs the fine-tune stage on an already trained state for
// config.finetune_steps steps.
void finetune_adversarial(TrainState& state, const corpus::Corpus& corpus,
                          const TrainConfig& config,
                          const std::function<void(int, const StepResult&)>&
                              on_step = {});

}  // namespace mrtts::training

#endif  // MRTTS_TRAINING_TRAINER_H_
