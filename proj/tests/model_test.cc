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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.h"
#include "mrtts/errors.h"
#include "mrtts/io.h"
#include "mrtts/losses/losses.h"
#include "mrtts/model/checkpoint.h"
#include "mrtts/model/model.h"
#include "test_util.h"

using namespace mrtts;
using mrtts::ad::Var;
using mrtts::testing::random_matrix;
using mrtts::testing::relative_error;

namespace {

const corpus::Corpus& small_corpus() {
  static const corpus::Corpus c = testing::table1_memory_corpus(4, 4, 3, 6);
  return c;
}

model::ModelConfig full_config() {
  model::ModelConfig c;
  c.vocabulary = small_corpus().manifest.vocabulary;
  c.dimensions = small_corpus().manifest.dimensions;
  return c;
}

TokenBatch tokens_of(std::vector<std::vector<int>> seqs) {
  std::vector<const std::vector<int>*> ptrs;
  for (const auto& s : seqs) ptrs.push_back(&s);
  return pad_tokens(ptrs);
}

PaddedSequence random_mels(int items, int frames, int bins, std::uint64_t seed,
                           int multiple = 1) {
  std::mt19937_64 rng(seed);
  std::vector<Matrix> mels;
  for (int b = 0; b < items; ++b) {
    mels.push_back(random_matrix(frames - b, bins, rng, 0.5));
  }
  std::vector<const Matrix*> ptrs;
  for (const auto& m : mels) ptrs.push_back(&m);
  return pad_sequences(ptrs, multiple);
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("encode_text shape, determinism and order sensitivity") {
  const model::Model m(full_config(), 7);
  const model::Mode eval;
  ad::Tape tape(false);
  const auto text = tokens_of({{1, 2, 3, 4, 5, 6, 7}});
  Var a = m.encode_text(tape, text, eval);
  CHECK(a.rows() == 7);
  CHECK(a.cols() == 64);
  CHECK(bitwise_equal(a.value(), m.encode_text(tape, text, eval).value()));

  const auto reversed = tokens_of({{7, 6, 5, 4, 3, 2, 1}});
  Var b = m.encode_text(tape, reversed, eval);
  double diff = 0.0;
  for (int t = 0; t < 7; ++t) {
    for (int c = 0; c < 64; ++c) {
      diff += std::abs(a.value()(t, c) - b.value()(6 - t, c));
    }
  }
  CHECK(diff > 1e-3);
}

TEST_CASE("encode_text rejects ids outside the vocabulary") {
  const model::Model m(full_config(), 7);
  ad::Tape tape(false);
  const auto text = tokens_of({{1, 2}, {0, 99, 3}});
  try {
    m.encode_text(tape, text, {});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("position 1") != std::string::npos);
  }
}

TEST_CASE("encode_reference yields style_dim regardless of length") {
  const model::Model m(full_config(), 7);
  ad::Tape tape(false);
  for (int frames : {50, 500}) {
    const auto mel = random_mels(1, frames, 40, frames);
    Var e = m.encode_reference(tape, 1, mel, {});
    CHECK(e.rows() == 1);
    CHECK(e.cols() == 32);
    CHECK(bitwise_equal(e.value(), m.encode_reference(tape, 1, mel, {}).value()));
    for (std::size_t i = 0; i < e.value().size(); ++i) {
      CHECK(std::isfinite(e.value()[i]));
    }
  }
  // separate parameters per dimension
  const auto mel = random_mels(1, 40, 40, 1);
  CHECK_FALSE(bitwise_equal(m.encode_reference(tape, 0, mel, {}).value(),
                            m.encode_reference(tape, 1, mel, {}).value()));
  PaddedSequence empty;
  empty.data = Matrix(0, 40);
  empty.items = 1;
  empty.steps = 0;
  empty.lengths = {0};
  CHECK_THROWS_AS(m.encode_reference(tape, 0, empty, {}), DataError);
}

TEST_CASE("padding does not change a reference embedding") {
  const model::Model m(full_config(), 7);
  ad::Tape tape(false);
  const auto batch = random_mels(3, 37, 40, 4);
  Var all = m.encode_reference(tape, 0, batch, {});
  for (int b = 0; b < 3; ++b) {
    const Matrix alone = batch.item(b);
    const Matrix* ptr = &alone;
    Var single =
        m.encode_reference(tape, 0, pad_sequences(std::span(&ptr, 1)), {});
    for (int c = 0; c < 32; ++c) {
      CHECK(single.value()(0, c) == doctest::Approx(all.value()(b, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("classifiers output distributions over K_j classes") {
  const model::Model m(full_config(), 7);
  std::mt19937_64 rng(5);
  ad::Tape tape(false);
  Var e = tape.constant(random_matrix(6, 32, rng, 3.0));
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Var p = m.classify(tape, e, i, j);
      CHECK(p.cols() == (j == 0 ? 2 : 4));
      for (int r = 0; r < 6; ++r) {
        double sum = 0.0;
        for (int c = 0; c < p.cols(); ++c) {
          CHECK(p.value()(r, c) >= 0.0);
          sum += p.value()(r, c);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
      }
      CHECK(bitwise_equal(p.value(), m.classify_plain(tape, e, i, j).value()));
    }
  }
  CHECK_THROWS(m.classify(tape, tape.constant(Matrix(2, 31)), 0, 1));
}

TEST_CASE("cross-dimension classifier gradient is the negated plain gradient") {
  const model::Model m(full_config(), 7);
  std::mt19937_64 rng(9);
  const Matrix e0 = random_matrix(5, 32, rng);
  const std::vector<int> labels = {0, 1, 2, 3, 1};
  auto grad = [&](bool reversed) {
    ad::Tape tape;
    Var e = tape.leaf(e0);
    Var p = reversed ? m.classify(tape, e, 0, 1, 1.0)
                     : m.classify_plain(tape, e, 0, 1);
    const losses::Prediction pred{p, labels};
    tape.backward(losses::cls_loss(std::span(&pred, 1)));
    return tape.grad_of(e);
  };
  const Matrix through = grad(true);
  const Matrix plain = grad(false);
  double worst = 0.0;
  for (std::size_t k = 0; k < plain.size(); ++k) {
    worst = std::max(worst, relative_error(through[k], -plain[k], 1e-12));
  }
  CHECK(worst <= 1e-5);
  double norm = 0.0;
  for (std::size_t k = 0; k < plain.size(); ++k) norm += std::abs(plain[k]);
  CHECK(norm > 0.0);
}

TEST_CASE("teacher-forced decoding emits teacher length") {
  auto config = full_config();
  config.reduction = 2;
  const model::Model m(config, 7);
  ad::Tape tape(false);
  const auto text = tokens_of({{1, 2, 3, 4, 5}});
  const auto teacher = random_mels(1, 120, 40, 2, 2);
  Var memory = m.encode_text(tape, text, {});
  std::vector<Var> styles = {m.encode_reference(tape, 0, teacher, {}),
                             m.encode_reference(tape, 1, teacher, {})};
  const auto out = m.decode_teacher(tape, memory, text, styles, teacher, {});
  CHECK(out.steps == 60);
  CHECK(out.mel.rows() == 120);
  CHECK(out.mel.cols() == 40);
  CHECK(out.stop_logits.rows() == 1);
  CHECK(out.stop_logits.cols() == 60);
  REQUIRE(out.attention.size() == 1);
  CHECK(out.attention[0].rows() == 60);
  CHECK(out.attention[0].cols() == 5);
  for (int s = 0; s < 60; ++s) {
    double sum = 0.0;
    for (int t = 0; t < 5; ++t) sum += out.attention[0](s, t);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("attention ignores padded tokens in a batch") {
  const auto& corpus = small_corpus();
  const model::Model m(testing::tiny_model_config(corpus), 3);
  ad::Tape tape(false);
  const auto text = tokens_of({{1, 2, 3, 4, 5, 6}, {3, 2}});
  const auto teacher = random_mels(2, 10, 6, 3, 2);
  Var memory = m.encode_text(tape, text, {});
  std::vector<Var> styles = {m.encode_reference(tape, 0, teacher, {}),
                             m.encode_reference(tape, 1, teacher, {})};
  const auto out = m.decode_teacher(tape, memory, text, styles, teacher, {});
  REQUIRE(out.attention.size() == 2);
  CHECK(out.attention[1].cols() == 2);
  for (int s = 0; s < out.steps; ++s) {
    CHECK(out.attention[1](s, 0) + out.attention[1](s, 1) ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("free-running decoding respects the step cap") {
  const auto& corpus = small_corpus();
  const model::Model m(testing::tiny_model_config(corpus), 3);
  ad::Tape tape(false);
  const auto text = tokens_of({{1, 2, 3}, {4, 5}});
  const auto refs = random_mels(2, 12, 6, 5);
  Var memory = m.encode_text(tape, text, {});
  std::vector<Var> styles = {m.encode_reference(tape, 0, refs, {}),
                             m.encode_reference(tape, 1, refs, {})};
  const auto out = m.decode_free(tape, memory, text, styles, {});
  CHECK(out.steps <= 4 * 3);
  CHECK(out.mel.rows() == 2 * out.frames_per_item());
  for (int b = 0; b < 2; ++b) {
    CHECK(out.frames[b] % 2 == 0);
    CHECK(out.frames[b] >= 2);
    CHECK(out.frames[b] <= 2 * 4 * text.lengths[b]);
    if (out.truncated[b]) CHECK(out.frames[b] == 2 * 4 * text.lengths[b]);
    for (int s = 0; s < out.attention[b].rows(); ++s) {
      double sum = 0.0;
      for (int t = 0; t < out.attention[b].cols(); ++t) {
        sum += out.attention[b](s, t);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    }
  }
}

TEST_CASE("model gradients match finite differences on random parameters") {
  const auto& corpus = small_corpus();
  model::Model m(testing::tiny_model_config(corpus), 11);
  const auto text = tokens_of({{1, 2, 3}, {4, 5, 6, 7}});
  const auto teacher = random_mels(2, 8, 6, 21, 2);
  const Matrix mask = teacher.mask(6);
  auto loss = [&](ad::Tape& tape) {
    Var memory = m.encode_text(tape, text, {});
    std::vector<Var> styles = {m.encode_reference(tape, 0, teacher, {}),
                               m.encode_reference(tape, 1, teacher, {})};
    const auto out = m.decode_teacher(tape, memory, text, styles, teacher, {});
    const losses::Prediction preds[] = {
        {m.classify_plain(tape, styles[0], 0, 1), {0, 3}},
        {m.classify(tape, styles[1], 1, 1), {2, 1}}};
    return ad::add(losses::recon_loss(out.mel, teacher.data, mask),
                   losses::cls_loss(preds));
  };
  m.params().zero_grad();
  {
    ad::Tape tape;
    tape.backward(loss(tape));
  }
  auto params = m.params().all();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> pick_param(0, params.size() - 1);
  int checked = 0;
  double worst = 0.0;
  while (checked < 10) {
    ad::Parameter& p = *params[pick_param(rng)];
    std::uniform_int_distribution<int> pick(0, p.value.size() - 1);
    const int k = pick(rng);
    const double analytic = p.grad[k];
    const double saved = p.value[k];
    const double h = 1e-6;
    p.value[k] = saved + h;
    double up, down;
    {
      ad::Tape tape(false);
      up = loss(tape).scalar();
    }
    p.value[k] = saved - h;
    {
      ad::Tape tape(false);
      down = loss(tape).scalar();
    }
    p.value[k] = saved;
    const double numeric = (up - down) / (2 * h);
    const double err = relative_error(analytic, numeric, 1e-6);
    worst = std::max(worst, err);
    ++checked;
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("checkpoint round trip preserves outputs bit-exactly") {
  const auto& corpus = small_corpus();
  const model::Model m(testing::tiny_model_config(corpus), 13);
  testing::TempDir dir;
  model::save_model(dir / "m.ckpt", m);
  const auto loaded = model::load_model(dir / "m.ckpt");
  CHECK(loaded->config().style_dim == 4);
  CHECK(loaded->config().vocabulary == m.config().vocabulary);
  CHECK(loaded->config().dimensions[1].classes == m.config().dimensions[1].classes);
  for (const auto* p : m.params().all()) {
    CHECK(bitwise_equal(p->value, loaded->params().get(p->name).value));
  }
  const auto text = tokens_of({{1, 2, 3}});
  const auto refs = random_mels(1, 12, 6, 5);
  auto run = [&](const model::Model& model) {
    ad::Tape tape(false);
    Var memory = model.encode_text(tape, text, {});
    std::vector<Var> styles = {model.encode_reference(tape, 0, refs, {}),
                               model.encode_reference(tape, 1, refs, {})};
    return model.decode_free(tape, memory, text, styles, {}).mel.value();
  };
  CHECK(bitwise_equal(run(m), run(*loaded)));
}

TEST_CASE("checkpoint loading rejects foreign files") {
  testing::TempDir dir;
  io::write_file_atomic(dir / "bad.ckpt", std::string_view("not an archive"));
  CHECK_THROWS_AS(model::load_model(dir / "bad.ckpt"), DataError);
  CHECK_THROWS_AS(model::load_model(dir / "missing.ckpt"), DataError);
}

TEST_CASE("model config validation and key round trip") {
  auto c = full_config();
  CHECK_NOTHROW(c.validate());
  c.style_dim = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = full_config();
  c.reversal_lambda = -1.0;
  CHECK_THROWS_AS(c.validate(), UsageError);

  c = full_config();
  c.style_dim = 17;
  c.reduction = 3;
  KeyValueFile f;
  c.write(f);
  model::ModelConfig back = full_config();
  back.read(f);
  CHECK(back.style_dim == 17);
  CHECK(back.reduction == 3);
}
