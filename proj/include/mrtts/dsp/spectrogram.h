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
#ifndef MRTTS_DSP_SPECTROGRAM_H_
#define MRTTS_DSP_SPECTROGRAM_H_

#include <span>
#include <vector>

#include "mrtts/matrix.h"

namespace mrtts {
class KeyValueFile;
}

namespace mrtts::dsp {

enum class BinKind { kLinear, kMel };

// Frames x bins, all entries >= 0.
struct Spectrogram {
  Matrix values;
  double frame_shift = 0.0;  // seconds
  BinKind kind = BinKind::kLinear;

  int frames() const { return values.rows(); }
  int bins() const { return values.cols(); }
};

struct DspConfig {
  int sample_rate = 16000;
  int fft_size = 1024;
  int hop_length = 200;
  int window_length = 800;
  int mel_bins = 40;
  int griffin_lim_iters = 60;
  double mel_fmin = 0.0;
  double mel_fmax = 8000.0;

  // Throws UsageError unless 0 < hop <= window <= fft and the rest positive.
  void validate() const;
  // Reads dsp.<field> keys, keeping current values as defaults.
  void read(const KeyValueFile& file);
  int linear_bins() const { return fft_size / 2 + 1; }
  double frame_shift() const {
    return static_cast<double>(hop_length) / sample_rate;
  }
};

struct Analysis {
  Spectrogram linear;
  Spectrogram mel;
};

// Frames produced for a signal of `samples` samples. The signal is
// reflection-padded by window/2 on both sides so frame m is centred on sample
// m * hop, giving floor((samples + window - window) / hop) + 1 frames.
int frame_count(std::size_t samples, const DspConfig& config);

// Hann-windowed short-time magnitude spectra plus their mel projection.
// Throws DataError when the waveform is shorter than one window.
Analysis analyze(std::span<const double> waveform, const DspConfig& config);

// Triangular mel filterbank (HTK mel scale), mel_bins x linear_bins.
Matrix mel_filterbank(const DspConfig& config);

// Smoothness-regularised least-squares inverse of the filterbank, clamped at
// 0.
Spectrogram mel_to_linear(const Spectrogram& mel, const DspConfig& config);

// Iterative phase reconstruction from a linear magnitude spectrogram, starting
// from zero phase. When `error_trace` is given it receives, per iteration,
// the distance || |STFT(x_k)| - S || over the full (two-sided) spectrum, which
// is non-increasing in k.
std::vector<double> griffin_lim(const Spectrogram& linear,
                                const DspConfig& config,
                                std::vector<double>* error_trace = nullptr);

// log(1 + S) and its inverse. The model works on compressed mel frames.
Spectrogram log_compress(const Spectrogram& s);
Spectrogram log_decompress(const Spectrogram& s);

// 10 log10(||ref||^2 / ||ref - est||^2) over the overlapping frames.
double spectral_snr_db(const Spectrogram& reference,
                       const Spectrogram& estimate);

}  // namespace mrtts::dsp

#endif  // MRTTS_DSP_SPECTROGRAM_H_
