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

#include "mrtts/corpus/generator.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "mrtts/dsp/wav.h"
#include "mrtts/errors.h"

namespace mrtts::corpus {
namespace {

struct Voice {
  double base_hz;
  double formant_hz;
};

constexpr Voice kVoices[kMaxVoices] = {
    {150.0, 700.0}, {210.0, 2000.0}, {120.0, 1200.0}, {260.0, 3000.0}};
constexpr double kFormantWidthHz = 350.0;
constexpr double kHarmonicFloor = 0.02;
constexpr double kRampSeconds = 0.01;
constexpr double kTremoloHz = 10.0;

// Amplitude over one token; u in [0, 1) is the position inside the token and
// t the time in seconds since the token started.
double contour(int style, double u, double t) {
  switch (style) {
    case 0:
      return 0.7;
    case 1:
      return std::exp(-3.0 * u);
    case 2:
      return 0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * kTremoloHz * t);
    default:
      return 0.15 + 0.85 * u;
  }
}

}  // namespace

CorpusSpec CorpusSpec::from_config(const KeyValueFile& file) {
  CorpusSpec spec;
  for (const auto& name : file.get_list("dimensions")) {
    spec.dimensions.push_back({name, file.get_list(name + ".classes")});
  }
  if (spec.dimensions.size() != 2) {
    throw UsageError(file.source() + ": exactly two dimensions are supported");
  }
  const auto& d0 = spec.dimensions[0].classes;
  const auto& d1 = spec.dimensions[1].classes;
  spec.counts.assign(d0.size(), std::vector<int>(d1.size(), 0));
  for (const auto& key : file.keys_with_prefix("cell.")) {
    const std::string rest = key.substr(5);
    const auto dot = rest.find('.');
    const auto c0 = std::find(d0.begin(), d0.end(), rest.substr(0, dot));
    const auto c1 = dot == std::string::npos
                        ? d1.end()
                        : std::find(d1.begin(), d1.end(), rest.substr(dot + 1));
    if (c0 == d0.end() || c1 == d1.end()) {
      throw UsageError(file.source() + ": cell '" + key +
                       "' does not name declared classes");
    }
    spec.counts[c0 - d0.begin()][c1 - d1.begin()] = file.get_int(key);
  }
  spec.vocab_size = file.get_int("vocab_size", spec.vocab_size);
  spec.min_tokens = file.get_int("min_tokens", spec.min_tokens);
  spec.max_tokens = file.get_int("max_tokens", spec.max_tokens);
  spec.token_seconds = file.get_double("token_seconds", spec.token_seconds);
  spec.test_fraction = file.get_double("test_fraction", spec.test_fraction);
  spec.dsp.sample_rate = file.get_int("sample_rate", spec.dsp.sample_rate);
  spec.validate();
  return spec;
}

void CorpusSpec::validate() const {
  if (dimensions.size() != 2) {
    throw UsageError("corpus spec: exactly two dimensions are supported");
  }
  const int k0 = static_cast<int>(dimensions[0].classes.size());
  const int k1 = static_cast<int>(dimensions[1].classes.size());
  if (k0 < 1 || k0 > kMaxVoices || k1 < 1 || k1 > kMaxContours) {
    throw UsageError("corpus spec: dimension '" + dimensions[0].name +
                     "' needs 1.." + std::to_string(kMaxVoices) +
                     " classes and '" + dimensions[1].name + "' 1.." +
                     std::to_string(kMaxContours));
  }
  if (static_cast<int>(counts.size()) != k0) {
    throw UsageError("corpus spec: count table does not match classes");
  }
  std::vector<int> total0(k0, 0), total1(k1, 0);
  for (int a = 0; a < k0; ++a) {
    if (static_cast<int>(counts[a].size()) != k1) {
      throw UsageError("corpus spec: count table does not match classes");
    }
    for (int b = 0; b < k1; ++b) {
      if (counts[a][b] < 0) {
        throw UsageError("corpus spec: negative count for cell " +
                         dimensions[0].classes[a] + "." +
                         dimensions[1].classes[b]);
      }
      total0[a] += counts[a][b];
      total1[b] += counts[a][b];
    }
  }
  for (int a = 0; a < k0; ++a) {
    if (total0[a] == 0) {
      throw UsageError("corpus spec: class '" + dimensions[0].classes[a] +
                       "' has zero utterances in all cells");
    }
  }
  for (int b = 0; b < k1; ++b) {
    if (total1[b] == 0) {
      throw UsageError("corpus spec: class '" + dimensions[1].classes[b] +
                       "' has zero utterances in all cells");
    }
  }
  if (vocab_size < 1 || vocab_size > 26) {
    throw UsageError("corpus spec: vocab_size must be in 1..26");
  }
  if (min_tokens < 1 || max_tokens < min_tokens) {
    throw UsageError("corpus spec: need 1 <= min_tokens <= max_tokens");
  }
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw UsageError("corpus spec: test_fraction must be in [0, 1)");
  }
  dsp.validate();
  if (min_tokens * token_seconds * dsp.sample_rate < dsp.window_length) {
    throw UsageError("corpus spec: shortest utterance is below one window");
  }
}

std::vector<std::string> CorpusSpec::vocabulary() const {
  std::vector<std::string> v;
  for (int k = 0; k < vocab_size; ++k) v.emplace_back(1, char('a' + k));
  return v;
}

std::vector<double> render_utterance(const CorpusSpec& spec,
                                     const std::vector<int>& tokens,
                                     int class0, int class1,
                                     std::mt19937_64& rng) {
  const Voice voice = kVoices[class0];
  const double rate = spec.dsp.sample_rate;
  const int token_len =
      static_cast<int>(std::lround(spec.token_seconds * rate));
  const int ramp = static_cast<int>(kRampSeconds * rate);
  const double nyquist = rate / 2.0;
  std::uniform_real_distribution<double> gain_dist(0.85, 1.15);
  std::uniform_real_distribution<double> jitter(-0.015, 0.015);
  std::uniform_real_distribution<double> phase_dist(0.0,
                                                    2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1e-3);

  const double gain = 0.5 * gain_dist(rng);
  std::vector<double> out(tokens.size() * token_len, 0.0);
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const double f0 =
        voice.base_hz * std::exp2(tokens[k] / 6.0) * (1.0 + jitter(rng));
    std::vector<double> weights;
    for (int h = 1; h * f0 < std::min(voice.formant_hz + 3 * kFormantWidthHz,
                                      nyquist - 200.0);
         ++h) {
      const double d = (h * f0 - voice.formant_hz) / kFormantWidthHz;
      weights.push_back(std::exp(-0.5 * d * d) + kHarmonicFloor);
    }
    if (weights.empty()) weights.push_back(1.0);
    double norm = 0.0;
    for (double w : weights) norm += w;

    double* dst = out.data() + k * token_len;
    for (std::size_t h = 0; h < weights.size(); ++h) {
      const double omega = 2.0 * std::numbers::pi * f0 * (h + 1) / rate;
      const std::complex<double> step = std::polar(1.0, omega);
      std::complex<double> z = std::polar(weights[h] / norm, phase_dist(rng));
      for (int n = 0; n < token_len; ++n) {
        dst[n] += z.imag();
        z *= step;
      }
    }
    for (int n = 0; n < token_len; ++n) {
      double env = contour(class1, static_cast<double>(n) / token_len,
                           n / rate);
      if (n < ramp) env *= 0.5 - 0.5 * std::cos(std::numbers::pi * n / ramp);
      if (n >= token_len - ramp) {
        env *= 0.5 - 0.5 * std::cos(std::numbers::pi * (token_len - 1 - n) /
                                    ramp);
      }
      dst[n] = gain * env * dst[n] + noise(rng);
    }
  }
  return out;
}

CorpusManifest generate_synthetic_corpus(const CorpusSpec& spec,
                                         std::uint64_t seed,
                                         const std::string& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  CorpusManifest m;
  m.dimensions = spec.dimensions;
  m.vocabulary = spec.vocabulary();
  m.dsp = spec.dsp;
  m.root = out_dir;
  const int k0 = static_cast<int>(spec.dimensions[0].classes.size());
  const int k1 = static_cast<int>(spec.dimensions[1].classes.size());
  for (int a = 0; a < k0; ++a) {
    for (int b = 0; b < k1; ++b) {
      const int count = spec.counts[a][b];
      const int n_test =
          static_cast<int>(std::lround(count * spec.test_fraction));
      for (int i = 0; i < count; ++i) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(a),
                          static_cast<std::uint32_t>(b),
                          static_cast<std::uint32_t>(i)};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<int> len_dist(spec.min_tokens,
                                                    spec.max_tokens);
        std::uniform_int_distribution<int> tok_dist(0, spec.vocab_size - 1);
        std::vector<int> tokens(len_dist(rng));
        for (int& t : tokens) t = tok_dist(rng);

        dsp::Waveform wave;
        wave.sample_rate = spec.dsp.sample_rate;
        wave.samples = render_utterance(spec, tokens, a, b, rng);

        UtteranceRecord r;
        char id[128];
        std::snprintf(id, sizeof(id), "%s_%s_%05d",
                      spec.dimensions[0].classes[a].c_str(),
                      spec.dimensions[1].classes[b].c_str(), i);
        r.utt_id = id;
        r.audio_path = "wav/" + r.utt_id + ".wav";
        for (int t : tokens) r.tokens.push_back(m.vocabulary[t]);
        r.labels = {a, b};
        r.duration_frames = dsp::frame_count(wave.samples.size(), spec.dsp);
        r.split = i >= count - n_test ? "test" : "train";
        dsp::write_wav((fs::path(out_dir) / r.audio_path).string(), wave);
        m.records.push_back(std::move(r));
      }
    }
  }
  rebuild_disjointness(m);
  validate(m, /*check_audio=*/true);
  save_manifest(m, (fs::path(out_dir) / "manifest.jsonl").string());
  return m;
}

}  // namespace mrtts::corpus
