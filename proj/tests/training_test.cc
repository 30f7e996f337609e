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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fixtures.h"
#include "json.hpp"
#include "mrtts/errors.h"
#include "mrtts/training/trainer.h"
#include "test_util.h"

using namespace mrtts;
using namespace mrtts::training;

namespace {

const corpus::Corpus& tiny_corpus() {
  static const corpus::Corpus c = testing::table1_memory_corpus(6, 3, 5, 6);
  return c;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.model = testing::tiny_model_config(tiny_corpus());
  c.dsp.mel_bins = 6;
  c.n_pairs = 2;
  c.steps = 12;
  c.finetune = false;
  c.finetune_steps = 4;
  c.checkpoint_interval = 5;
  c.learning_rate = 3e-3;
  c.seed = 17;
  return c;
}

corpus::Batch fixed_batch(int n_pairs, std::uint64_t seed = 3) {
  std::mt19937_64 rng(seed);
  return corpus::make_batch(tiny_corpus(), rng, n_pairs, true,
                            tiny_config().model.reduction);
}

bool same_report(const losses::LossReport& a, const losses::LossReport& b) {
  return a.recon == b.recon && a.cls_paired == b.cls_paired &&
         a.cls_unpaired == b.cls_unpaired &&
         a.cls_synthesized == b.cls_synthesized && a.adv_cycle == b.adv_cycle &&
         a.ortho == b.ortho && a.total == b.total && a.stop == b.stop &&
         a.objective == b.objective && a.per_classifier == b.per_classifier;
}

double grad_abs_sum(ad::ParameterStore& store, const std::string& prefix) {
  double s = 0.0;
  for (auto* p : store.with_prefix(prefix)) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) s += std::abs(p->grad[i]);
  }
  return s;
}

int count_lines(const std::string& path) {
  std::ifstream in(path);
  int n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

}  // namespace

TEST_CASE("single-pair batch exercises every loss path") {
  const auto config = tiny_config();
  TrainState state = init_state(config, tiny_corpus().manifest);
  const auto batch = fixed_batch(1);
  REQUIRE(batch.n_paired == 1);
  REQUIRE(batch.n_unpaired == 1);
  std::mt19937_64 rng(1);
  const auto r = train_step(state, batch, config, rng);
  CHECK(r.report.recon > 0.0);
  CHECK(r.report.cls_paired > 0.0);
  CHECK(r.report.cls_unpaired > 0.0);
  CHECK(r.report.cls_synthesized > 0.0);
  CHECK(r.report.ortho > 0.0);
  CHECK(r.report.per_classifier.size() == 4);
  CHECK(r.teacher_forced == 1);
  CHECK(r.reencoded == 1);
  CHECK(state.step == 1);
  CHECK(r.report.total ==
        doctest::Approx(losses::total_loss(r.report, config.weights))
            .epsilon(1e-12));
  CHECK(r.report.adv_cycle ==
        doctest::Approx(r.report.cls_paired + r.report.cls_unpaired +
                        config.weights.delta * r.report.cls_synthesized)
            .epsilon(1e-12));
}

TEST_CASE("re-encoding happens exactly for unpaired triplets") {
  const auto config = tiny_config();
  TrainState state = init_state(config, tiny_corpus().manifest);
  for (int n : {1, 3}) {
    const auto batch = fixed_batch(n, 10 + n);
    std::mt19937_64 rng(2);
    const auto r = forward_backward(state, batch, config,
                                    ObjectiveScales::main_stage(config), rng,
                                    false);
    CHECK(r.reencoded == batch.n_unpaired);
    CHECK(r.teacher_forced == batch.n_paired);
  }
}

TEST_CASE("synthesized samples are scored against their references' labels") {
  const auto config = tiny_config();
  TrainState state = init_state(config, tiny_corpus().manifest);
  std::mt19937_64 srng(14);
  std::vector<corpus::Triplet> triplets;
  for (int k = 0; k < 6; ++k) {
    triplets.push_back(corpus::sample_unpaired_triplet(tiny_corpus(), srng));
  }
  const auto batch = corpus::collate(tiny_corpus(), triplets, 2);
  std::mt19937_64 rng(4);
  const auto r = forward_backward(state, batch, config,
                                  ObjectiveScales::main_stage(config), rng,
                                  false);
  REQUIRE(r.synthesized_frames.size() == triplets.size());

  // Re-score the generated spectrograms outside the training step.
  const model::Model& m = *state.model;
  const int items = static_cast<int>(triplets.size());
  const int steps = r.synthesized.rows() / items;
  auto score = [&](bool own_labels) {
    ad::Tape tape(false);
    const ad::Var mel = tape.constant(r.synthesized);
    std::vector<losses::Prediction> preds;
    for (int i = 0; i < 2; ++i) {
      const ad::Var e = m.encode_reference(tape, i, mel, items, steps,
                                           r.synthesized_frames, model::Mode{});
      for (int j = 0; j < 2; ++j) {
        preds.push_back({m.classify_plain(tape, e, i, j),
                         own_labels ? batch.labels[i][j] : batch.labels[j][j]});
      }
    }
    return losses::cls_loss(preds).scalar();
  };
  CHECK(r.report.cls_synthesized == doctest::Approx(score(true)).epsilon(1e-12));
  CHECK(std::abs(r.report.cls_synthesized - score(false)) > 1e-6);
}

TEST_CASE("paired-only batch leaves the unpaired terms at zero") {
  const auto config = tiny_config();
  TrainState state = init_state(config, tiny_corpus().manifest);
  std::mt19937_64 brng(4);
  const auto batch = corpus::make_batch(tiny_corpus(), brng, 3, false, 2);
  REQUIRE(batch.n_unpaired == 0);
  std::mt19937_64 rng(2);
  const auto r = forward_backward(state, batch, config,
                                  ObjectiveScales::main_stage(config), rng,
                                  true);
  CHECK(r.report.cls_unpaired == 0.0);
  CHECK(r.report.cls_synthesized == 0.0);
  CHECK(r.report.adv_cycle == r.report.cls_paired);
  CHECK(r.reencoded == 0);
}

TEST_CASE("unpaired-only batch has no reconstruction term") {
  const auto config = tiny_config();
  TrainState state = init_state(config, tiny_corpus().manifest);
  std::mt19937_64 srng(6);
  std::vector<corpus::Triplet> triplets;
  for (int k = 0; k < 3; ++k) {
    triplets.push_back(corpus::sample_unpaired_triplet(tiny_corpus(), srng));
  }
  const auto batch = corpus::collate(tiny_corpus(), triplets, 2);
  REQUIRE(batch.n_paired == 0);
  std::mt19937_64 rng(2);
  const auto r = forward_backward(state, batch, config,
                                  ObjectiveScales::main_stage(config), rng,
                                  true);
  CHECK(r.report.recon == 0.0);
  CHECK(r.report.stop == 0.0);
  CHECK(r.report.cls_synthesized > 0.0);
  CHECK(r.teacher_forced == 0);
  CHECK(r.reencoded == 3);
}

TEST_CASE("synthesized-sample classification alone reaches the decoder") {
  const auto config = tiny_config();
  TrainState state = init_state(config, tiny_corpus().manifest);
  std::mt19937_64 srng(8);
  const auto batch = corpus::collate(
      tiny_corpus(), {corpus::sample_unpaired_triplet(tiny_corpus(), srng)}, 2);
  ObjectiveScales only;
  only.recon = only.cls_paired = only.cls_unpaired = only.ortho = 0.0;
  only.stop = only.game = 0.0;
  only.cls_synthesized = 1.0;
  std::mt19937_64 rng(2);
  forward_backward(state, batch, config, only, rng, true);
  auto& params = state.model->params();
  CHECK(grad_abs_sum(params, "dec/frame_out") > 0.0);
  CHECK(grad_abs_sum(params, "dec/prenet") > 0.0);
  CHECK(grad_abs_sum(params, "dec/decoder_rnn") > 0.0);
  CHECK(grad_abs_sum(params, "text/") > 0.0);
}

TEST_CASE("fifty steps on one batch reduce the total loss") {
  auto config = tiny_config();
  TrainState state = init_state(config, tiny_corpus().manifest);
  const auto batch = fixed_batch(2, 21);
  double first = 0.0, last = 0.0;
  for (int s = 0; s < 50; ++s) {
    std::mt19937_64 rng = step_rng(config.seed, s);
    const auto r = train_step(state, batch, config, rng);
    if (s == 0) first = r.report.total;
    last = r.report.total;
  }
  MESSAGE("total " << first << " -> " << last);
  CHECK(last < first);
}

TEST_CASE("non-finite loss aborts the step without touching the state") {
  const auto config = tiny_config();
  TrainState state = init_state(config, tiny_corpus().manifest);
  auto& p = state.model->params().get("dec/frame_out/b");
  p.value[0] = NAN;
  auto& w = state.model->params().get("text/embedding/table");
  const Matrix before = w.value;
  const auto batch = fixed_batch(1);
  std::mt19937_64 rng(1);
  try {
    train_step(state, batch, config, rng);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.term() == "recon");
  }
  CHECK(state.step == 0);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(w.value[i] == before[i]);
}

TEST_CASE("checkpoint round trip reproduces a fixed-batch report bit-exactly") {
  auto config = tiny_config();
  config.finetune = true;
  TrainState state = init_state(config, tiny_corpus().manifest);
  const auto batch = fixed_batch(2, 31);
  for (int s = 0; s < 3; ++s) {
    std::mt19937_64 rng = step_rng(config.seed, s);
    finetune_step(state, batch, config, rng);
  }
  testing::TempDir dir;
  save_state(dir / "state.ckpt", state, config);
  TrainState loaded = load_state(dir / "state.ckpt");
  CHECK(loaded.step == state.step);
  CHECK(loaded.seed == state.seed);
  REQUIRE(loaded.discriminator);

  const auto probe = fixed_batch(2, 77);
  std::mt19937_64 r1(5), r2(5);
  const auto a = forward_backward(state, probe, config,
                                  ObjectiveScales::main_stage(config), r1,
                                  false);
  const auto b = forward_backward(loaded, probe, config,
                                  ObjectiveScales::main_stage(config), r2,
                                  false);
  CHECK(same_report(a.report, b.report));

  // optimizer moments survive too: one more update stays identical
  std::mt19937_64 r3(9), r4(9);
  finetune_step(state, probe, config, r3);
  finetune_step(loaded, probe, config, r4);
  for (const auto* p : state.model->params().all()) {
    const auto& q = loaded.model->params().get(p->name);
    bool same = true;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      same = same && p->value[i] == q.value[i];
    }
    CHECK_MESSAGE(same, p->name);
  }
}

TEST_CASE("fine-tune stage with weight zero reproduces the main-stage losses") {
  auto config = tiny_config();
  config.finetune = true;
  config.finetune_weight = 0.0;
  TrainState state = init_state(config, tiny_corpus().manifest);
  const auto batch = fixed_batch(2, 41);
  std::mt19937_64 r1(5), r2(5);
  const auto main = forward_backward(state, batch, config,
                                     ObjectiveScales::main_stage(config), r1,
                                     false);
  const auto fine = forward_backward(state, batch, config,
                                     ObjectiveScales::finetune_stage(config),
                                     r2, false);
  CHECK(same_report(main.report, fine.report));
  CHECK(fine.report.game > 0.0);
}

TEST_CASE("fine-tune stage logs the game term and discriminator accuracy") {
  auto config = tiny_config();
  config.finetune = true;
  TrainState state = init_state(config, tiny_corpus().manifest);
  int calls = 0;
  bool logged = true;
  finetune_adversarial(state, tiny_corpus(), config,
                       [&](int, const StepResult& r) {
                         ++calls;
                         logged = logged && r.report.game > 0.0 &&
                                  r.discriminator_accuracy >= 0.0 &&
                                  r.discriminator_accuracy <= 1.0;
                       });
  CHECK(calls == config.finetune_steps);
  CHECK(state.step == config.finetune_steps);
  CHECK(logged);
}

TEST_CASE("train writes metrics and checkpoints and resumes exactly") {
  auto config = tiny_config();
  config.finetune = true;
  config.finetune_steps = 3;
  testing::TempDir full_dir, split_dir;
  const auto full = train(config, tiny_corpus(), full_dir.str(), {});
  CHECK(full.final_step == config.total_steps());
  CHECK(count_lines(full_dir / "metrics.jsonl") == config.total_steps());
  CHECK(std::filesystem::exists(full_dir / "model.ckpt"));
  CHECK(std::filesystem::exists(full_dir / "checkpoint.ckpt"));

  TrainOptions first;
  first.stop_after = 7;  // past the step-5 checkpoint
  const auto partial = train(config, tiny_corpus(), split_dir.str(), first);
  CHECK(partial.final_step == 7);
  CHECK_FALSE(std::filesystem::exists(split_dir / "model.ckpt"));
  TrainOptions resume;
  resume.resume = true;
  const auto rest = train(config, tiny_corpus(), split_dir.str(), resume);
  CHECK(rest.final_step == full.final_step);
  CHECK(count_lines(split_dir / "metrics.jsonl") == config.total_steps());

  const auto a = model::load_model(full_dir / "model.ckpt");
  const auto b = model::load_model(split_dir / "model.ckpt");
  for (const auto* p : a->params().all()) {
    const auto& q = b->params().get(p->name);
    bool same = true;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      same = same && p->value[i] == q.value[i];
    }
    CHECK_MESSAGE(same, p->name);
  }

  std::ifstream in(full_dir / "metrics.jsonl");
  std::string line;
  std::getline(in, line);
  const auto record = nlohmann::json::parse(line);
  CHECK(record.at("step") == 1);
  CHECK(record.at("stage") == "main");
  for (const char* key : {"recon", "cls_paired", "cls_unpaired",
                          "cls_synthesized", "adv_cycle", "ortho", "total"}) {
    CHECK_MESSAGE(record.contains(key), key);
  }
  CHECK(record.at("per_classifier").size() == 4);
}

TEST_CASE("resume after a crash between checkpoints drops unsaved records") {
  auto config = tiny_config();
  testing::TempDir dir;
  TrainOptions first;
  first.stop_after = 7;
  train(config, tiny_corpus(), dir.str(), first);
  // simulate a kill: checkpoint at 5, metrics at 7 and a torn line
  {
    TrainOptions to5;
    to5.stop_after = 5;
    testing::TempDir other;
    train(config, tiny_corpus(), other.str(), to5);
    std::filesystem::copy_file(other / "checkpoint.ckpt",
                               dir / "checkpoint.ckpt",
                               std::filesystem::copy_options::overwrite_existing);
  }
  {
    std::ofstream out(dir / "metrics.jsonl", std::ios::app);
    out << "{\"step\": 8, \"tot";
  }
  TrainOptions resume;
  resume.resume = true;
  const auto s = train(config, tiny_corpus(), dir.str(), resume);
  CHECK(s.final_step == config.total_steps());
  CHECK(count_lines(dir / "metrics.jsonl") == config.total_steps());
}

TEST_CASE("ablation batches carry no unpaired triplets or cross classifiers") {
  auto config = tiny_config();
  config.ablate_intercross = true;
  testing::TempDir dir;
  int steps = 0;
  TrainOptions opts;
  opts.on_step = [&](int, const StepResult& r) {
    ++steps;
    CHECK(r.reencoded == 0);
    CHECK(r.report.cls_unpaired == 0.0);
    CHECK(r.report.cls_synthesized == 0.0);
    CHECK(r.report.per_classifier.size() == 2);
  };
  train(config, tiny_corpus(), dir.str(), opts);
  CHECK(steps == config.steps);
}

TEST_CASE("train config parsing, validation and learning-rate schedule") {
  const auto f = KeyValueFile::parse(
      "train.n_pairs = 16\ntrain.steps = 2000\ntrain.finetune = false\n"
      "train.learning_rate = 0.002\ntrain.lr_decay_rate = 0.5\n"
      "train.lr_decay_steps = 100\ntrain.lr_min = 0.0001\n"
      "train.ortho_form = batch_frobenius\nloss.gamma = 0.1\n"
      "model.style_dim = 16\n",
      "t.conf");
  const auto c = TrainConfig::from_config(f);
  CHECK(c.n_pairs == 16);
  CHECK(c.steps == 2000);
  CHECK_FALSE(c.finetune);
  CHECK(c.total_steps() == 2000);
  CHECK(c.ortho_form == losses::OrthoForm::kBatchFrobenius);
  CHECK(c.weights.gamma == 0.1);
  CHECK(c.model.style_dim == 16);
  CHECK(c.learning_rate_at(0) == doctest::Approx(0.002));
  CHECK(c.learning_rate_at(100) == doctest::Approx(0.001));
  CHECK(c.learning_rate_at(10000) == doctest::Approx(0.0001));

  const auto back = TrainConfig::from_config(c.to_config());
  CHECK(back.n_pairs == 16);
  CHECK(back.learning_rate == c.learning_rate);
  CHECK(back.model.style_dim == 16);

  CHECK_THROWS_AS(TrainConfig::from_config(
                      KeyValueFile::parse("train.n_pairs = 0\n", "t")),
                  UsageError);
  CHECK_THROWS_AS(TrainConfig::from_config(
                      KeyValueFile::parse("train.ortho_form = full\n", "t")),
                  UsageError);
  CHECK_THROWS_AS(TrainConfig::from_config(
                      KeyValueFile::parse("loss.alpha = -1\n", "t")),
                  UsageError);
}
