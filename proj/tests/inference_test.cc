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
#include <cstdlib>

#include "fixtures.h"
#include "mrtts/errors.h"
#include "mrtts/inference/synthesize.h"
#include "mrtts/io.h"
#include "mrtts/model/checkpoint.h"
#include "test_util.h"

using namespace mrtts;
using namespace mrtts::inference;

namespace {

const corpus::Corpus& tiny_corpus() {
  static const corpus::Corpus c = testing::table1_memory_corpus(4, 2, 9, 6);
  return c;
}

dsp::DspConfig tiny_dsp() {
  dsp::DspConfig d;
  d.mel_bins = 6;
  d.griffin_lim_iters = 5;
  return d;
}

dsp::Waveform tone(double hz, double seconds, int rate = 16000) {
  dsp::Waveform w;
  w.sample_rate = rate;
  for (int i = 0; i < seconds * rate; ++i) {
    w.samples.push_back(0.3 * std::sin(2 * M_PI * hz * i / rate));
  }
  return w;
}

}  // namespace

TEST_CASE("constrained attention masks outside the window") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<double> scores(30);
  for (auto& s : scores) s = n(rng);
  const auto w = constrained_attention(scores, 10, 7);
  double sum = 0.0;
  for (int j = 0; j < 30; ++j) {
    if (j < 3 || j > 17) {
      CHECK(w[j] == 0.0);
    } else {
      CHECK(w[j] > 0.0);
    }
    sum += w[j];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  const auto left = constrained_attention(scores, 0, 7);
  for (int j = 0; j < 30; ++j) CHECK((left[j] > 0.0) == (j <= 7));
  const auto right = constrained_attention(scores, 29, 7);
  for (int j = 0; j < 30; ++j) CHECK((right[j] > 0.0) == (j >= 22));
  CHECK_THROWS(constrained_attention(scores, 30, 7));
  CHECK_THROWS(constrained_attention(scores, 3, 0));
}

TEST_CASE("constrained attention keeps an in-window maximum") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 3.0);
  std::uniform_int_distribution<int> len(1, 40);
  int compared = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> scores(len(rng));
    for (auto& s : scores) s = n(rng);
    const int size = static_cast<int>(scores.size());
    std::uniform_int_distribution<int> pos(0, size - 1);
    const int prev = pos(rng);
    const int best = static_cast<int>(
        std::max_element(scores.begin(), scores.end()) - scores.begin());
    const auto w = constrained_attention(scores, prev, 7);
    const int got =
        static_cast<int>(std::max_element(w.begin(), w.end()) - w.begin());
    CHECK(std::abs(got - prev) <= 7);
    if (std::abs(best - prev) <= 7) {
      CHECK(got == best);
      ++compared;
    }
  }
  CHECK(compared > 500);
}

TEST_CASE("constrained attention agrees with the decoder's masking") {
  for (int prev : {0, 3, 10, 29}) {
    const auto b = model::window_bounds(prev, 7, 30);
    std::vector<double> flat(30, 0.0);
    const auto w = constrained_attention(flat, prev, 7);
    for (int j = 0; j < 30; ++j) CHECK((w[j] > 0.0) == (j >= b.lo && j <= b.hi));
  }
}

TEST_CASE("parse_text accepts spaced and packed symbols") {
  const std::vector<std::string> vocab = {"a", "b", "c"};
  CHECK(parse_text(vocab, "a c b") == std::vector<int>{0, 2, 1});
  CHECK(parse_text(vocab, "acb") == std::vector<int>{0, 2, 1});
  try {
    parse_text(vocab, "abz");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("z") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_text(vocab, "  "), DataError);
}

TEST_CASE("synthesis keeps every step inside the window") {
  const model::Model m(testing::tiny_model_config(tiny_corpus()), 5);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> tok(0, 15), len(10, 40), frames(6, 40);
  int steps = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> tokens(len(rng));
    for (int& t : tokens) t = tok(rng);
    const std::vector<Matrix> refs = {
        testing::random_matrix(frames(rng), 6, rng),
        testing::random_matrix(frames(rng), 6, rng)};
    SynthesisOptions opts;
    opts.vocode = false;
    const auto s = synthesize_from_mels(m, tokens, refs, tiny_dsp(), opts);
    CHECK(s.argmax[0] <= 7);
    for (std::size_t k = 1; k < s.argmax.size(); ++k) {
      REQUIRE(std::abs(s.argmax[k] - s.argmax[k - 1]) <= 7);
      ++steps;
    }
    CHECK(s.attention.rows() == static_cast<int>(s.argmax.size()));
  }
  CHECK(steps > 0);
}

TEST_CASE("synthesis is deterministic and the waveform matches the frames") {
  const model::Model m(testing::tiny_model_config(tiny_corpus()), 5);
  const auto dsp = tiny_dsp();
  const std::vector<dsp::Waveform> refs = {tone(200, 0.3), tone(900, 0.4)};
  const std::vector<int> tokens = {1, 4, 2, 8};
  const auto a = synthesize(m, tokens, refs, dsp);
  const auto b = synthesize(m, tokens, refs, dsp);
  CHECK(a.waveform.samples == b.waveform.samples);
  CHECK(a.mel.rows() == a.frames);
  CHECK(a.frames % 2 == 0);
  CHECK(a.truncated == (a.frames == 2 * 4 * 4));
  const double expected = static_cast<double>(a.frames) * dsp.hop_length;
  CHECK(std::abs(static_cast<double>(a.waveform.samples.size()) - expected) <=
        dsp.window_length);
  for (double p : a.stop_probabilities) CHECK((p >= 0.0 && p <= 1.0));
}

TEST_CASE("synthesis validates its inputs") {
  const model::Model m(testing::tiny_model_config(tiny_corpus()), 5);
  const std::vector<dsp::Waveform> one = {tone(200, 0.3)};
  CHECK_THROWS_AS(synthesize(m, {1, 2}, one, tiny_dsp()), UsageError);
  const std::vector<dsp::Waveform> wrong_rate = {tone(200, 0.3, 8000),
                                                 tone(200, 0.3, 8000)};
  CHECK_THROWS_AS(synthesize(m, {1, 2}, wrong_rate, tiny_dsp()), DataError);
  const std::vector<dsp::Waveform> refs = {tone(200, 0.3), tone(300, 0.3)};
  CHECK_THROWS_AS(synthesize(m, {1, 99}, refs, tiny_dsp()), DataError);
}

TEST_CASE("model archives carry their signal settings") {
  const model::Model m(testing::tiny_model_config(tiny_corpus()), 5);
  testing::TempDir dir;
  auto dsp = tiny_dsp();
  dsp.hop_length = 160;
  model::save_model(dir / "m.ckpt", m, dsp);
  dsp::DspConfig back;
  model::load_model(dir / "m.ckpt", &back);
  CHECK(back.hop_length == 160);
  CHECK(back.mel_bins == 6);
  CHECK(back.griffin_lim_iters == 5);
}

TEST_CASE("attention dump has one row per decoder step") {
  testing::TempDir dir;
  write_attention(dir / "a.txt", Matrix({{0.25, 0.75}, {1, 0}}));
  CHECK(io::read_file(dir / "a.txt") == "0.25 0.75\n1 0\n");
}
