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

#include "mrtts/inference/synthesize.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "mrtts/corpus/dataset.h"
#include "mrtts/errors.h"
#include "mrtts/io.h"

namespace mrtts::inference {

using ad::Tape;
using ad::Var;

std::vector<double> constrained_attention(std::span<const double> scores,
                                          int prev_argmax, int window) {
  const int n = static_cast<int>(scores.size());
  if (n == 0) return {};
  if (window < 1 || prev_argmax < 0 || prev_argmax >= n) {
    throw std::invalid_argument("constrained_attention: bad window or index");
  }
  const auto [lo, hi] = model::window_bounds(prev_argmax, window, n);
  double top = -std::numeric_limits<double>::infinity();
  for (int j = lo; j <= hi; ++j) top = std::max(top, scores[j]);
  std::vector<double> weights(n, 0.0);
  double sum = 0.0;
  for (int j = lo; j <= hi; ++j) {
    weights[j] = std::exp(scores[j] - top);
    sum += weights[j];
  }
  for (int j = lo; j <= hi; ++j) weights[j] /= sum;
  return weights;
}

std::vector<int> parse_text(const std::vector<std::string>& vocabulary,
                            const std::string& text) {
  std::vector<std::string> symbols;
  const bool spaced = std::any_of(text.begin(), text.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c));
  });
  if (spaced) {
    std::istringstream in(text);
    for (std::string s; in >> s;) symbols.push_back(s);
  } else {
    for (char c : text) symbols.emplace_back(1, c);
  }
  if (symbols.empty()) throw DataError("empty input text");
  return corpus::token_ids(vocabulary, symbols);
}

Matrix reference_mel(const dsp::Waveform& wave, const dsp::DspConfig& dsp) {
  if (wave.sample_rate != dsp.sample_rate) {
    throw DataError("reference audio is " + std::to_string(wave.sample_rate) +
                    " Hz, model expects " + std::to_string(dsp.sample_rate));
  }
  return dsp::log_compress(dsp::analyze(wave.samples, dsp).mel).values;
}

dsp::Waveform vocode(const Matrix& log_mel, const dsp::DspConfig& dsp) {
  dsp::Spectrogram mel{log_mel, dsp.frame_shift(), dsp::BinKind::kMel};
  const auto linear = dsp::mel_to_linear(dsp::log_decompress(mel), dsp);
  dsp::Waveform out;
  out.sample_rate = dsp.sample_rate;
  out.samples = dsp::griffin_lim(linear, dsp);
  return out;
}

Synthesis synthesize_from_mels(const model::Model& model,
                               const std::vector<int>& tokens,
                               std::span<const Matrix> reference_mels,
                               const dsp::DspConfig& dsp,
                               const SynthesisOptions& options) {
  const auto& mc = model.config();
  if (static_cast<int>(reference_mels.size()) != mc.dimension_count()) {
    throw UsageError("synthesis needs one reference per style dimension (" +
                     std::to_string(mc.dimension_count()) + ")");
  }
  if (dsp.mel_bins != mc.mel_bins) {
    throw DataError("signal settings disagree with the model's mel bins");
  }
  Tape tape(false);
  const model::Mode eval;
  const std::vector<const std::vector<int>*> seqs = {&tokens};
  const TokenBatch text = pad_tokens(seqs);
  Var memory = model.encode_text(tape, text, eval);
  std::vector<Var> styles;
  for (int d = 0; d < mc.dimension_count(); ++d) {
    const Matrix* ref = &reference_mels[d];
    styles.push_back(model.encode_reference(
        tape, d, pad_sequences(std::span(&ref, 1)), eval));
  }
  model::DecodeOptions decode;
  decode.attention_window = options.attention_window;
  const auto out = model.decode_free(tape, memory, text, styles, eval, decode);

  Synthesis s;
  s.frames = out.frames[0];
  s.truncated = out.truncated[0];
  const Matrix& mel = out.mel.value();
  s.mel = Matrix(s.frames, mc.mel_bins);
  std::copy(mel.data(), mel.data() + s.mel.size(), s.mel.data());
  s.attention = out.attention[0];
  for (int step = 0; step < out.steps; ++step) {
    const auto row = s.attention.row(step);
    s.argmax.push_back(static_cast<int>(
        std::max_element(row.begin(), row.end()) - row.begin()));
    s.stop_probabilities.push_back(
        1.0 / (1.0 + std::exp(-out.stop_logits.value()(0, step))));
  }
  if (options.vocode) s.waveform = vocode(s.mel, dsp);
  return s;
}

Synthesis synthesize(const model::Model& model, const std::vector<int>& tokens,
                     std::span<const dsp::Waveform> references,
                     const dsp::DspConfig& dsp,
                     const SynthesisOptions& options) {
  std::vector<Matrix> mels;
  for (const auto& w : references) mels.push_back(reference_mel(w, dsp));
  return synthesize_from_mels(model, tokens, mels, dsp, options);
}

void write_attention(const std::string& path, const Matrix& attention) {
  std::string text;
  char buf[32];
  for (int r = 0; r < attention.rows(); ++r) {
    for (int c = 0; c < attention.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), c == 0 ? "%.6g" : " %.6g",
                    attention(r, c));
      text += buf;
    }
    text += "\n";
  }
  io::write_file_atomic(path, std::string_view(text));
}

}  // namespace mrtts::inference
