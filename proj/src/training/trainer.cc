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

#include "mrtts/training/trainer.h"

#include <spdlog/spdlog.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mrtts/errors.h"
#include "mrtts/io.h"
#include "mrtts/model/checkpoint.h"

namespace mrtts::training {

using ad::Tape;
using ad::Var;
using json = nlohmann::ordered_json;

// ---- configuration --------------------------------------------------------

TrainConfig TrainConfig::from_config(const KeyValueFile& f) {
  TrainConfig c;
  c.n_pairs = f.get_int("train.n_pairs", c.n_pairs);
  c.steps = f.get_int("train.steps", c.steps);
  c.finetune = f.get_bool("train.finetune", c.finetune);
  c.finetune_steps = f.get_int("train.finetune_steps", c.finetune_steps);
  c.finetune_weight = f.get_double("train.finetune_weight", c.finetune_weight);
  c.learning_rate = f.get_double("train.learning_rate", c.learning_rate);
  c.lr_decay_rate = f.get_double("train.lr_decay_rate", c.lr_decay_rate);
  c.lr_decay_steps = f.get_int("train.lr_decay_steps", c.lr_decay_steps);
  c.lr_min = f.get_double("train.lr_min", c.lr_min);
  c.adam.beta1 = f.get_double("train.adam_beta1", c.adam.beta1);
  c.adam.beta2 = f.get_double("train.adam_beta2", c.adam.beta2);
  c.adam.epsilon = f.get_double("train.adam_epsilon", c.adam.epsilon);
  c.grad_clip = f.get_double("train.grad_clip", c.grad_clip);
  c.seed = static_cast<std::uint64_t>(f.get_int("train.seed", 1));
  c.checkpoint_interval =
      f.get_int("train.checkpoint_interval", c.checkpoint_interval);
  c.ablate_intercross =
      f.get_bool("train.ablate_intercross", c.ablate_intercross);
  const std::string ortho =
      f.get_string("train.ortho_form", std::string("per_sample_cross"));
  if (ortho == "per_sample_cross") {
    c.ortho_form = losses::OrthoForm::kPerSampleCross;
  } else if (ortho == "batch_frobenius") {
    c.ortho_form = losses::OrthoForm::kBatchFrobenius;
  } else {
    throw UsageError(f.source() + ": train.ortho_form must be per_sample_cross "
                     "or batch_frobenius");
  }
  c.discriminator_channels =
      f.get_int("train.discriminator_channels", c.discriminator_channels);
  c.weights.read(f);
  c.dsp.read(f);
  c.model.read(f);
  if (f.has("model.mel_bins") && c.model.mel_bins != c.dsp.mel_bins) {
    throw UsageError(f.source() + ": model.mel_bins must equal dsp.mel_bins");
  }
  c.model.mel_bins = c.dsp.mel_bins;
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (n_pairs < 1 || steps < 0 || finetune_steps < 0 ||
      checkpoint_interval < 1 || lr_decay_steps < 1) {
    throw UsageError("train: counts must be positive");
  }
  if (!(learning_rate > 0.0) || !(lr_decay_rate > 0.0) || !(lr_min >= 0.0) ||
      !(grad_clip >= 0.0) || !(finetune_weight >= 0.0)) {
    throw UsageError("train: rates and weights must be non-negative");
  }
  if (discriminator_channels < 1) {
    throw UsageError("train.discriminator_channels must be positive");
  }
  weights.validate();
  dsp.validate();
}

KeyValueFile TrainConfig::to_config() const {
  KeyValueFile f;
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  f.set("train.n_pairs", std::to_string(n_pairs));
  f.set("train.steps", std::to_string(steps));
  f.set("train.finetune", finetune ? "true" : "false");
  f.set("train.finetune_steps", std::to_string(finetune_steps));
  f.set("train.finetune_weight", num(finetune_weight));
  f.set("train.learning_rate", num(learning_rate));
  f.set("train.lr_decay_rate", num(lr_decay_rate));
  f.set("train.lr_decay_steps", std::to_string(lr_decay_steps));
  f.set("train.lr_min", num(lr_min));
  f.set("train.adam_beta1", num(adam.beta1));
  f.set("train.adam_beta2", num(adam.beta2));
  f.set("train.adam_epsilon", num(adam.epsilon));
  f.set("train.grad_clip", num(grad_clip));
  f.set("train.seed", std::to_string(seed));
  f.set("train.checkpoint_interval", std::to_string(checkpoint_interval));
  f.set("train.ablate_intercross", ablate_intercross ? "true" : "false");
  f.set("train.ortho_form", ortho_form == losses::OrthoForm::kPerSampleCross
                                ? "per_sample_cross"
                                : "batch_frobenius");
  f.set("train.discriminator_channels", std::to_string(discriminator_channels));
  f.set("loss.alpha", num(weights.alpha));
  f.set("loss.beta", num(weights.beta));
  f.set("loss.gamma", num(weights.gamma));
  f.set("loss.delta", num(weights.delta));
  f.set("dsp.sample_rate", std::to_string(dsp.sample_rate));
  f.set("dsp.fft_size", std::to_string(dsp.fft_size));
  f.set("dsp.hop_length", std::to_string(dsp.hop_length));
  f.set("dsp.window_length", std::to_string(dsp.window_length));
  f.set("dsp.mel_bins", std::to_string(dsp.mel_bins));
  f.set("dsp.griffin_lim_iters", std::to_string(dsp.griffin_lim_iters));
  f.set("dsp.mel_fmin", num(dsp.mel_fmin));
  f.set("dsp.mel_fmax", num(dsp.mel_fmax));
  model.write(f);
  return f;
}

double TrainConfig::learning_rate_at(int step) const {
  const double lr =
      learning_rate * std::pow(lr_decay_rate,
                               static_cast<double>(step) / lr_decay_steps);
  return std::max(lr, lr_min);
}

ObjectiveScales ObjectiveScales::main_stage(const TrainConfig& c) {
  ObjectiveScales s;
  s.recon = c.weights.alpha;
  s.cls_paired = c.weights.beta;
  s.cls_unpaired = c.weights.beta;
  s.cls_synthesized = c.weights.beta * c.weights.delta;
  s.ortho = c.weights.gamma;
  s.stop = 1.0;
  s.game = 0.0;
  return s;
}

ObjectiveScales ObjectiveScales::finetune_stage(const TrainConfig& c) {
  ObjectiveScales s = main_stage(c);
  s.game = c.finetune_weight;
  return s;
}

// ---- discriminator --------------------------------------------------------

Discriminator::Discriminator(int mel_bins, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  conv1_ = nn::Conv1d(params_, "disc/conv1", mel_bins, channels, 3, 2, rng);
  conv2_ = nn::Conv1d(params_, "disc/conv2", channels, channels, 3, 2, rng);
  out_ = nn::Linear(params_, "disc/out", channels, 1, rng);
}

Var Discriminator::logits(Tape& tape, Var mel, int items, int steps,
                          std::span<const int> lengths) const {
  std::vector<int> lens(lengths.begin(), lengths.end());
  Var x = mel;
  int t = steps;
  for (const nn::Conv1d* conv : {&conv1_, &conv2_}) {
    x = ad::relu((*conv)(tape, x, items, t));
    t = conv->out_steps(t);
    for (int& len : lens) len = (len + 1) / 2;
  }
  // Masked mean over time: mean_rows_per_item divides by t, so valid rows are
  // weighted by t / len.
  Matrix weight(items * t, x.cols());
  for (int b = 0; b < items; ++b) {
    for (int s = 0; s < std::min(lens[b], t); ++s) {
      for (int c = 0; c < x.cols(); ++c) {
        weight(b * t + s, c) = static_cast<double>(t) / lens[b];
      }
    }
  }
  return out_(tape, ad::mean_rows_per_item(ad::mul_const(x, weight), items));
}

// ---- state ----------------------------------------------------------------

TrainState init_state(const TrainConfig& config,
                      const corpus::CorpusManifest& manifest) {
  TrainState s;
  model::ModelConfig mc = config.model;
  mc.vocabulary = manifest.vocabulary;
  mc.dimensions = manifest.dimensions;
  mc.mel_bins = config.dsp.mel_bins;
  s.model = std::make_unique<model::Model>(std::move(mc), config.seed);
  s.optimizer = Adam(config.adam);
  if (config.finetune) {
    s.discriminator = std::make_unique<Discriminator>(
        config.dsp.mel_bins, config.discriminator_channels, config.seed + 1);
    s.discriminator_optimizer = Adam(config.adam);
  }
  s.seed = config.seed;
  return s;
}

void save_state(const std::string& path, const TrainState& s,
                const TrainConfig& config) {
  model::Archive a;
  a.kind = "train-state";
  model::store_model(*s.model, a);
  a.meta["dsp"] = model::dsp_to_json(config.dsp);
  s.optimizer.save("adam/", a);
  if (s.discriminator) {
    model::save_parameters(s.discriminator->params(), "disc/param/", a);
    s.discriminator_optimizer.save("disc_adam/", a);
    a.meta["discriminator_channels"] = config.discriminator_channels;
  }
  a.meta["step"] = s.step;
  a.meta["seed"] = s.seed;
  a.meta["best_total"] = std::isfinite(s.best_total) ? json(s.best_total)
                                                     : json(nullptr);
  a.meta["best_step"] = s.best_step;
  a.meta["train_config"] = config.to_config().dump();
  model::write_archive(path, a);
}

TrainState load_state(const std::string& path) {
  const model::Archive a = model::read_archive(path);
  if (a.kind != "train-state") {
    throw DataError(path + ": not a training checkpoint");
  }
  TrainState s;
  s.model = model::restore_model(a);
  const TrainConfig config = TrainConfig::from_config(KeyValueFile::parse(
      a.meta.value("train_config", std::string()), path));
  s.optimizer = Adam(config.adam);
  s.optimizer.load("adam/", a, s.model->params());
  if (a.meta.contains("discriminator_channels")) {
    s.discriminator = std::make_unique<Discriminator>(
        s.model->config().mel_bins,
        a.meta.at("discriminator_channels").get<int>(), 0);
    model::load_parameters(a, "disc/param/", s.discriminator->params());
    s.discriminator_optimizer = Adam(config.adam);
    s.discriminator_optimizer.load("disc_adam/", a,
                                   s.discriminator->params());
  }
  s.step = a.meta.value("step", 0);
  s.seed = a.meta.value("seed", std::uint64_t{0});
  s.best_total = a.meta.at("best_total").is_null()
                     ? std::numeric_limits<double>::infinity()
                     : a.meta.at("best_total").get<double>();
  s.best_step = a.meta.value("best_step", -1);
  return s;
}

std::mt19937_64 step_rng(std::uint64_t seed, int step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), 0x5eedu};
  return std::mt19937_64(seq);
}

// ---- one step -------------------------------------------------------------

namespace {

TokenBatch slice_tokens(const TokenBatch& t, int begin, int end) {
  TokenBatch out;
  out.items = end - begin;
  out.steps = t.steps;
  out.ids.assign(t.ids.begin() + static_cast<std::ptrdiff_t>(begin) * t.steps,
                 t.ids.begin() + static_cast<std::ptrdiff_t>(end) * t.steps);
  out.lengths.assign(t.lengths.begin() + begin, t.lengths.begin() + end);
  return out;
}

std::vector<int> slice(const std::vector<int>& v, int begin, int end) {
  return {v.begin() + begin, v.begin() + end};
}

// Synthesized frames of the unpaired slice, kept for the discriminator.
struct Generated {
  Matrix mel;
  int items = 0;
  int steps = 0;
  std::vector<int> frames;
};

void require_finite(double v, const char* term) {
  if (!std::isfinite(v)) {
    throw NumericalError(term, std::string("non-finite ") + term +
                                   " loss term; step aborted");
  }
}

StepResult run_step(TrainState& state, const corpus::Batch& batch,
                    const TrainConfig& config, const ObjectiveScales& scales,
                    std::mt19937_64& rng, bool backward, Generated* generated) {
  const model::Model& m = *state.model;
  const model::ModelConfig& mc = m.config();
  const int dims = mc.dimension_count();
  const int items = batch.size();
  const int paired = batch.n_paired;
  const int unpaired = batch.n_unpaired;
  const int tokens = batch.text.steps;
  const bool intercross = config.ablate_intercross;

  Tape tape(backward);
  const model::Mode mode{true, &rng};
  StepResult res;
  losses::LossReport& rep = res.report;
  std::vector<std::pair<Var, double>> objective;

  Var memory = m.encode_text(tape, batch.text, mode);
  std::vector<Var> e(dims);
  for (int d = 0; d < dims; ++d) {
    e[d] = m.encode_reference(tape, d, batch.refs[d], mode);
  }

  if (paired > 0) {
    std::vector<Var> styles;
    for (int d = 0; d < dims; ++d) styles.push_back(ad::slice_rows(e[d], 0, paired));
    const TokenBatch text = slice_tokens(batch.text, 0, paired);
    const auto out = m.decode_teacher(
        tape, ad::slice_rows(memory, 0, paired * tokens), text, styles,
        batch.targets, mode);
    Var recon = losses::recon_loss(out.mel, batch.targets.data,
                                   batch.targets.mask(mc.mel_bins));
    Matrix stop_target(paired, out.steps);
    for (int b = 0; b < paired; ++b) {
      const int last = (batch.targets.lengths[b] + mc.reduction - 1) /
                           mc.reduction - 1;
      for (int s = last; s < out.steps; ++s) stop_target(b, s) = 1.0;
    }
    Var stop = ad::mean_all(ad::sub(ad::softplus(out.stop_logits),
                                    ad::mul_const(out.stop_logits, stop_target)));
    rep.recon = recon.scalar();
    rep.stop = stop.scalar();
    objective.push_back({recon, scales.recon});
    objective.push_back({stop, scales.stop});
    res.teacher_forced = paired;
  }

  std::vector<losses::Prediction> pred_paired, pred_unpaired;
  for (int i = 0; i < dims; ++i) {
    for (int j = 0; j < dims; ++j) {
      if (intercross && i != j) continue;
      Var probs = m.classify(tape, e[i], i, j);
      const auto& labels = batch.labels[i][j];
      if (paired > 0) {
        pred_paired.push_back(
            {ad::slice_rows(probs, 0, paired), slice(labels, 0, paired)});
      }
      if (unpaired > 0) {
        pred_unpaired.push_back({ad::slice_rows(probs, paired, items),
                                 slice(labels, paired, items)});
      }
      const losses::Prediction all{probs, labels};
      rep.per_classifier[{i, j}] =
          losses::cls_loss(std::span<const losses::Prediction>(&all, 1))
              .scalar();
    }
  }
  std::optional<double> cls_paired, cls_unpaired, cls_synth;
  if (!pred_paired.empty()) {
    Var v = losses::cls_loss(pred_paired);
    cls_paired = v.scalar();
    objective.push_back({v, scales.cls_paired});
  }
  if (!pred_unpaired.empty()) {
    Var v = losses::cls_loss(pred_unpaired);
    cls_unpaired = v.scalar();
    objective.push_back({v, scales.cls_unpaired});
  }

  if (unpaired > 0 && !intercross) {
    std::vector<Var> styles;
    for (int d = 0; d < dims; ++d) {
      styles.push_back(ad::slice_rows(e[d], paired, items));
    }
    const TokenBatch text = slice_tokens(batch.text, paired, items);
    const auto out = m.decode_free(
        tape, ad::slice_rows(memory, paired * tokens, items * tokens), text,
        styles, mode);
    const int frames = out.frames_per_item();
    std::vector<losses::Prediction> preds;
    std::vector<Var> reencoded(dims);
    for (int d = 0; d < dims; ++d) {
      reencoded[d] = m.encode_reference(tape, d, out.mel, unpaired, frames,
                                        out.frames, mode);
    }
    res.reencoded = unpaired;
    res.synthesized = out.mel.value();
    res.synthesized_frames = out.frames;
    for (int i = 0; i < dims; ++i) {
      for (int j = 0; j < dims; ++j) {
        // Same targets as the real embeddings: re-encoding reference i's
        // style from the output must recover reference i's classes, and the
        // reversed cross terms push the decoder to drop reference i's class
        // in the other dimension.
        preds.push_back({m.classify(tape, reencoded[i], i, j),
                         slice(batch.labels[i][j], paired, items)});
      }
    }
    Var v = losses::cls_loss(preds);
    cls_synth = v.scalar();
    objective.push_back({v, scales.cls_synthesized});

    if (state.discriminator) {
      Var logits = state.discriminator->logits(tape, out.mel, unpaired, frames,
                                               out.frames);
      Var game = ad::mean_all(ad::softplus(ad::scale(logits, -1.0)));
      rep.game = game.scalar();
      if (scales.game > 0.0) objective.push_back({game, scales.game});
    }
    if (generated != nullptr) {
      generated->mel = out.mel.value();
      generated->items = unpaired;
      generated->steps = frames;
      generated->frames = out.frames;
    }
  }

  Var ortho = losses::ortho_loss(e, config.ortho_form);
  rep.ortho = ortho.scalar();
  objective.push_back({ortho, scales.ortho});

  rep.cls_paired = cls_paired.value_or(0.0);
  rep.cls_unpaired = cls_unpaired.value_or(0.0);
  rep.cls_synthesized = cls_synth.value_or(0.0);
  rep.adv_cycle = losses::adv_cycle_loss(cls_paired, cls_unpaired, cls_synth,
                                         config.weights);
  require_finite(rep.recon, "recon");
  require_finite(rep.cls_paired, "cls_paired");
  require_finite(rep.cls_unpaired, "cls_unpaired");
  require_finite(rep.cls_synthesized, "cls_synthesized");
  require_finite(rep.ortho, "ortho");
  require_finite(rep.stop, "stop");
  require_finite(rep.game, "game");
  rep.total = losses::total_loss(rep, config.weights);

  Var total;
  for (auto& [term, scale] : objective) {
    if (scale == 0.0) continue;
    Var scaled = ad::scale(term, scale);
    total = total.valid() ? ad::add(total, scaled) : scaled;
  }
  rep.objective = total.valid() ? total.scalar() : 0.0;
  require_finite(rep.objective, "objective");

  if (backward) {
    state.model->params().zero_grad();
    if (state.discriminator) state.discriminator->params().zero_grad();
    if (total.valid() && total.requires_grad()) tape.backward(total);
  }
  return res;
}

}  // namespace

StepResult forward_backward(TrainState& state, const corpus::Batch& batch,
                            const TrainConfig& config,
                            const ObjectiveScales& scales,
                            std::mt19937_64& rng, bool backward) {
  return run_step(state, batch, config, scales, rng, backward, nullptr);
}

StepResult train_step(TrainState& state, const corpus::Batch& batch,
                      const TrainConfig& config, std::mt19937_64& rng) {
  StepResult res = run_step(state, batch, config,
                            ObjectiveScales::main_stage(config), rng, true,
                            nullptr);
  res.grad_norm = clip_grad_norm(state.model->params(), config.grad_clip);
  state.optimizer.step(state.model->params(),
                       config.learning_rate_at(state.step));
  ++state.step;
  return res;
}

StepResult finetune_step(TrainState& state, const corpus::Batch& batch,
                         const TrainConfig& config, std::mt19937_64& rng) {
  if (!state.discriminator) {
    state.discriminator = std::make_unique<Discriminator>(
        state.model->config().mel_bins, config.discriminator_channels,
        config.seed + 1);
    state.discriminator_optimizer = Adam(config.adam);
  }
  Generated fake;
  StepResult res = run_step(state, batch, config,
                            ObjectiveScales::finetune_stage(config), rng, true,
                            &fake);
  const double lr = config.learning_rate_at(state.step);
  res.grad_norm = clip_grad_norm(state.model->params(), config.grad_clip);
  state.optimizer.step(state.model->params(), lr);

  if (fake.items > 0 && batch.n_paired > 0) {
    Discriminator& disc = *state.discriminator;
    disc.params().zero_grad();
    Tape tape;
    Var real = disc.logits(tape, tape.constant(batch.targets.data),
                           batch.targets.items, batch.targets.steps,
                           batch.targets.lengths);
    Var gen = disc.logits(tape, tape.constant(fake.mel), fake.items,
                          fake.steps, fake.frames);
    int correct = 0;
    for (int b = 0; b < real.rows(); ++b) correct += real.value()(b, 0) > 0.0;
    for (int b = 0; b < gen.rows(); ++b) correct += gen.value()(b, 0) < 0.0;
    res.discriminator_accuracy =
        static_cast<double>(correct) / (real.rows() + gen.rows());
    Var loss = ad::add(ad::mean_all(ad::softplus(ad::scale(real, -1.0))),
                       ad::mean_all(ad::softplus(gen)));
    res.discriminator_loss = loss.scalar();
    require_finite(res.discriminator_loss, "discriminator");
    tape.backward(loss);
    clip_grad_norm(disc.params(), config.grad_clip);
    state.discriminator_optimizer.step(disc.params(), lr);
  }
  ++state.step;
  return res;
}

// ---- loops ----------------------------------------------------------------

namespace {

json metrics_record(int step, const char* stage, double lr,
                    const StepResult& r) {
  const auto& p = r.report;
  json j;
  j["step"] = step;
  j["stage"] = stage;
  j["lr"] = lr;
  j["recon"] = p.recon;
  j["cls_paired"] = p.cls_paired;
  j["cls_unpaired"] = p.cls_unpaired;
  j["cls_synthesized"] = p.cls_synthesized;
  j["adv_cycle"] = p.adv_cycle;
  j["ortho"] = p.ortho;
  j["total"] = p.total;
  j["stop"] = p.stop;
  j["game"] = p.game;
  j["objective"] = p.objective;
  json per = json::object();
  for (const auto& [ij, v] : p.per_classifier) {
    per[std::to_string(ij.first) + "_" + std::to_string(ij.second)] = v;
  }
  j["per_classifier"] = per;
  j["grad_norm"] = r.grad_norm;
  if (std::isfinite(r.discriminator_accuracy)) {
    j["discriminator_loss"] = r.discriminator_loss;
    j["discriminator_accuracy"] = r.discriminator_accuracy;
  }
  return j;
}

// Keeps the records of steps <= last_step (resume after a kill).
void trim_metrics(const std::string& path, int last_step) {
  if (!std::filesystem::exists(path)) return;
  std::istringstream in(io::read_file(path));
  std::string kept;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    try {
      if (json::parse(line).value("step", 0) <= last_step) kept += line + "\n";
    } catch (const json::exception&) {
      break;  // torn final line
    }
  }
  io::write_file_atomic(path, std::string_view(kept));
}

}  // namespace

TrainSummary train(const TrainConfig& config, const corpus::Corpus& corpus,
                   const std::string& out_dir, const TrainOptions& options) {
  namespace fs = std::filesystem;
  config.validate();
  const auto& framing = corpus.manifest.dsp;
  if (framing.sample_rate != config.dsp.sample_rate ||
      framing.hop_length != config.dsp.hop_length ||
      framing.window_length != config.dsp.window_length ||
      framing.fft_size != config.dsp.fft_size) {
    throw DataError("corpus was framed with different dsp settings than the "
                    "training config");
  }
  if (!corpus.mels.empty() && corpus.mels[0].cols() != config.dsp.mel_bins) {
    throw DataError("corpus features have " +
                    std::to_string(corpus.mels[0].cols()) +
                    " mel bins, config expects " +
                    std::to_string(config.dsp.mel_bins));
  }
  fs::create_directories(out_dir);
  const std::string ckpt = (fs::path(out_dir) / "checkpoint.ckpt").string();
  const std::string metrics = (fs::path(out_dir) / "metrics.jsonl").string();

  TrainState state;
  if (options.resume && fs::exists(ckpt)) {
    state = load_state(ckpt);
    if (state.seed != config.seed) {
      throw UsageError("checkpoint in " + out_dir +
                       " was written with a different seed");
    }
    trim_metrics(metrics, state.step);
    spdlog::info("resuming from step {}", state.step);
  } else {
    state = init_state(config, corpus.manifest);
    io::write_file_atomic(metrics, std::string_view());
  }
  std::ofstream log(metrics, std::ios::app);

  TrainSummary summary;
  const int reduction = state.model->config().reduction;
  while (state.step < config.total_steps()) {
    if (options.stop_after >= 0 && state.step >= options.stop_after) break;
    const bool main = state.step < config.steps;
    std::mt19937_64 rng = step_rng(config.seed, state.step);
    const corpus::Batch batch =
        corpus::make_batch(corpus, rng, config.n_pairs,
                           !config.ablate_intercross, reduction);
    const double lr = config.learning_rate_at(state.step);
    const StepResult r = main ? train_step(state, batch, config, rng)
                              : finetune_step(state, batch, config, rng);
    log << metrics_record(state.step, main ? "main" : "finetune", lr, r).dump()
        << "\n";
    log.flush();
    if (std::isnan(summary.first_total)) summary.first_total = r.report.total;
    summary.last_total = r.report.total;
    if (r.report.total < state.best_total) {
      state.best_total = r.report.total;
      state.best_step = state.step;
    }
    if (state.step % 50 == 0) {
      spdlog::info("step {} recon {:.4f} adv {:.4f} ortho {:.4f} total {:.4f}",
                   state.step, r.report.recon, r.report.adv_cycle,
                   r.report.ortho, r.report.total);
    }
    if (state.step % config.checkpoint_interval == 0) {
      save_state(ckpt, state, config);
    }
    if (options.on_step) options.on_step(state.step, r);
  }
  save_state(ckpt, state, config);
  if (state.step >= config.total_steps()) {
    model::save_model((fs::path(out_dir) / "model.ckpt").string(),
                      *state.model, config.dsp);
  }
  summary.final_step = state.step;
  return summary;
}

void finetune_adversarial(
    TrainState& state, const corpus::Corpus& corpus, const TrainConfig& config,
    const std::function<void(int, const StepResult&)>& on_step) {
  const int reduction = state.model->config().reduction;
  const int end = state.step + config.finetune_steps;
  while (state.step < end) {
    std::mt19937_64 rng = step_rng(config.seed, state.step);
    const corpus::Batch batch =
        corpus::make_batch(corpus, rng, config.n_pairs, true, reduction);
    const StepResult r = finetune_step(state, batch, config, rng);
    if (on_step) on_step(state.step, r);
  }
}

}  // namespace mrtts::training
