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

#ifndef MRTTS_INFERENCE_SYNTHESIZE_H_
#define MRTTS_INFERENCE_SYNTHESIZE_H_

#include <span>
#include <string>
#include <vector>

#include "mrtts/dsp/spectrogram.h"
#include "mrtts/dsp/wav.h"
#include "mrtts/matrix.h"
#include "mrtts/model/model.h"

namespace mrtts::inference {

inline constexpr int kAttentionWindow = 7;

// Softmax over `scores` with every position outside
// [prev_argmax - window, prev_argmax + window] (clamped to the sequence)
// forced to weight 0.
std::vector<double> constrained_attention(std::span<const double> scores,
                                          int prev_argmax,
                                          int window = kAttentionWindow);

// Splits text into vocabulary symbols: whitespace-separated when it contains
// whitespace, otherwise one symbol per character. Throws DataError naming the
// first unknown symbol and its position.
std::vector<int> parse_text(const std::vector<std::string>& vocabulary,
                            const std::string& text);

struct SynthesisOptions {
  int attention_window = kAttentionWindow;  // 0 disables the constraint
  bool vocode = true;                       // run Griffin-Lim
};

struct Synthesis {
  dsp::Waveform waveform;     // empty unless vocoded
  Matrix mel;                 // log-compressed frames x mel_bins
  Matrix attention;           // decoder steps x tokens
  std::vector<int> argmax;    // per decoder step
  std::vector<double> stop_probabilities;  // per decoder step
  int frames = 0;
  bool truncated = false;
};

// Text plus one reference waveform per style dimension.
Synthesis synthesize(const model::Model& model, const std::vector<int>& tokens,
                     std::span<const dsp::Waveform> references,
                     const dsp::DspConfig& dsp,
                     const SynthesisOptions& options = {});

// Same, from reference mel frames (log-compressed) instead of audio.
Synthesis synthesize_from_mels(const model::Model& model,
                               const std::vector<int>& tokens,
                               std::span<const Matrix> reference_mels,
                               const dsp::DspConfig& dsp,
                               const SynthesisOptions& options = {});

// Vocodes log-compressed mel frames.
dsp::Waveform vocode(const Matrix& log_mel, const dsp::DspConfig& dsp);

// Log-compressed mel frames of a waveform, checking its sample rate.
Matrix reference_mel(const dsp::Waveform& wave, const dsp::DspConfig& dsp);

// Whitespace-separated rows of the attention matrix, one per decoder step.
void write_attention(const std::string& path, const Matrix& attention);

}  // namespace mrtts::inference

#endif  // MRTTS_INFERENCE_SYNTHESIZE_H_
