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
#include "mrtts/dsp/spectrogram.h"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include "mrtts/config.h"
#include "mrtts/errors.h"
#include "mrtts/kernels/kernels.h"

namespace mrtts::dsp {
namespace {

// FFTW's planner is not re-entrant; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    time_ = fftw_alloc_real(static_cast<std::size_t>(n));
    freq_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard<std::mutex> lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(n, time_, freq_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, freq_, time_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(time_);
    fftw_free(freq_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* time() { return time_; }
  fftw_complex* freq() { return freq_; }
  int size() const { return n_; }
  void forward() { fftw_execute(forward_); }
  // Unnormalised: the result is n times the true inverse.
  void inverse() { fftw_execute(inverse_); }

 private:
  int n_;
  double* time_ = nullptr;
  fftw_complex* freq_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

std::vector<double> hann(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / length);
  }
  return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Magnitudes of frames taken at m * hop from `signal` (no further padding).
Matrix stft_magnitude(std::span<const double> signal, int frames,
                      const DspConfig& c, const std::vector<double>& window,
                      RealFft& fft, std::vector<std::vector<double>>* phase_re,
                      std::vector<std::vector<double>>* phase_im) {
  const int bins = c.linear_bins();
  Matrix mag(frames, bins);
  for (int m = 0; m < frames; ++m) {
    double* t = fft.time();
    const std::size_t start = static_cast<std::size_t>(m) * c.hop_length;
    for (int i = 0; i < c.fft_size; ++i) {
      t[i] = i < c.window_length ? signal[start + i] * window[i] : 0.0;
    }
    fft.forward();
    const fftw_complex* f = fft.freq();
    for (int k = 0; k < bins; ++k) {
      const double re = f[k][0], im = f[k][1];
      const double a = std::hypot(re, im);
      mag(m, k) = a;
      if (phase_re != nullptr) {
        (*phase_re)[m][k] = a > 0.0 ? re / a : 1.0;
        (*phase_im)[m][k] = a > 0.0 ? im / a : 0.0;
      }
    }
  }
  return mag;
}

}  // namespace

void DspConfig::read(const KeyValueFile& f) {
  sample_rate = f.get_int("dsp.sample_rate", sample_rate);
  fft_size = f.get_int("dsp.fft_size", fft_size);
  hop_length = f.get_int("dsp.hop_length", hop_length);
  window_length = f.get_int("dsp.window_length", window_length);
  mel_bins = f.get_int("dsp.mel_bins", mel_bins);
  griffin_lim_iters = f.get_int("dsp.griffin_lim_iters", griffin_lim_iters);
  mel_fmin = f.get_double("dsp.mel_fmin", mel_fmin);
  mel_fmax = f.get_double("dsp.mel_fmax", mel_fmax);
  validate();
}

void DspConfig::validate() const {
  if (sample_rate <= 0 || fft_size <= 0 || hop_length <= 0 ||
      window_length <= 0 || mel_bins <= 0 || griffin_lim_iters < 0) {
    throw UsageError("dsp config: all sizes must be positive");
  }
  if (!(hop_length <= window_length && window_length <= fft_size)) {
    throw UsageError("dsp config: need hop_length <= window_length <= fft_size");
  }
  if (!(0.0 <= mel_fmin && mel_fmin < mel_fmax &&
        mel_fmax <= sample_rate / 2.0)) {
    throw UsageError("dsp config: need 0 <= mel_fmin < mel_fmax <= nyquist");
  }
}

int frame_count(std::size_t samples, const DspConfig& c) {
  const std::size_t pad = static_cast<std::size_t>(c.window_length / 2);
  const std::size_t padded = samples + 2 * pad;
  if (padded < static_cast<std::size_t>(c.window_length)) return 0;
  return static_cast<int>((padded - c.window_length) / c.hop_length) + 1;
}

Matrix mel_filterbank(const DspConfig& c) {
  c.validate();
  const int bins = c.linear_bins();
  Matrix fb(c.mel_bins, bins);
  const double lo = hz_to_mel(c.mel_fmin);
  const double hi = hz_to_mel(c.mel_fmax);
  std::vector<double> edges(static_cast<std::size_t>(c.mel_bins) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) /
                                  (c.mel_bins + 1));
  }
  for (int j = 0; j < c.mel_bins; ++j) {
    const double left = edges[j], centre = edges[j + 1], right = edges[j + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * c.sample_rate / c.fft_size;
      double w = 0.0;
      if (f >= left && f <= centre) {
        w = (f - left) / (centre - left);
      } else if (f > centre && f <= right) {
        w = (right - f) / (right - centre);
      }
      fb(j, k) = w;
    }
  }
  return fb;
}

Analysis analyze(std::span<const double> waveform, const DspConfig& c) {
  c.validate();
  if (waveform.size() < static_cast<std::size_t>(c.window_length)) {
    throw DataError("analyze: waveform shorter than one window (" +
                    std::to_string(waveform.size()) + " < " +
                    std::to_string(c.window_length) + " samples)");
  }
  const std::size_t n = waveform.size();
  const std::size_t pad = static_cast<std::size_t>(c.window_length / 2);
  std::vector<double> padded(n + 2 * pad);
  for (std::size_t i = 0; i < padded.size(); ++i) {
    std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) -
                         static_cast<std::ptrdiff_t>(pad);
    if (src < 0) src = -src;
    const auto last = static_cast<std::ptrdiff_t>(n) - 1;
    if (src > last) src = 2 * last - src;
    padded[i] = waveform[static_cast<std::size_t>(src)];
  }
  const int frames = frame_count(n, c);
  RealFft fft(c.fft_size);
  const std::vector<double> window = hann(c.window_length);

  Analysis out;
  out.linear.values =
      stft_magnitude(padded, frames, c, window, fft, nullptr, nullptr);
  out.linear.frame_shift = c.frame_shift();
  out.linear.kind = BinKind::kLinear;

  const Matrix fb = mel_filterbank(c);
  out.mel.values = Matrix(frames, c.mel_bins);
  kernels::active().gemm_nt(frames, c.mel_bins, c.linear_bins(),
                            out.linear.values.data(), fb.data(),
                            out.mel.values.data(), false);
  out.mel.frame_shift = c.frame_shift();
  out.mel.kind = BinKind::kMel;
  return out;
}

Spectrogram mel_to_linear(const Spectrogram& mel, const DspConfig& c) {
  if (mel.kind != BinKind::kMel || mel.bins() != c.mel_bins) {
    throw DataError("mel_to_linear: expected a mel spectrogram with " +
                    std::to_string(c.mel_bins) + " bins");
  }
  const Matrix fb = mel_filterbank(c);
  const int bins = c.linear_bins();
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      m(fb.data(), c.mel_bins, bins);
  // Least squares with a second-difference smoothness penalty:
  //   x = (M^T M + lambda D^T D + eps I)^-1 M^T y.
  // A plain minimum-norm inverse cannot place energy below the first or above
  // the last filter centre; the penalty extrapolates smoothly there.
  constexpr double kSmoothness = 1e-2;
  Eigen::MatrixXd normal = m.transpose() * m;
  for (int k = 0; k + 2 < bins; ++k) {
    const double d[3] = {1.0, -2.0, 1.0};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) normal(k + a, k + b) += kSmoothness * d[a] * d[b];
    }
  }
  normal.diagonal().array() += 1e-9;
  // z is bins x mel_bins, stored row-major so linear = mel * z^T.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> z =
      normal.ldlt().solve(Eigen::MatrixXd(m.transpose()));

  Spectrogram out;
  out.kind = BinKind::kLinear;
  out.frame_shift = mel.frame_shift;
  out.values = Matrix(mel.frames(), bins);
  kernels::active().gemm_nt(mel.frames(), bins, c.mel_bins, mel.values.data(),
                            z.data(), out.values.data(), false);
  for (double& v : out.values.values()) v = std::max(v, 0.0);
  return out;
}

std::vector<double> griffin_lim(const Spectrogram& linear, const DspConfig& c,
                                std::vector<double>* error_trace) {
  c.validate();
  if (linear.kind != BinKind::kLinear || linear.bins() != c.linear_bins()) {
    throw DataError("griffin_lim: expected a linear spectrogram with " +
                    std::to_string(c.linear_bins()) + " bins");
  }
  const int frames = linear.frames();
  const int bins = c.linear_bins();
  const std::size_t pad = static_cast<std::size_t>(c.window_length / 2);
  if (frames == 0) return {};
  const std::size_t length =
      static_cast<std::size_t>(frames - 1) * c.hop_length + c.window_length;
  const std::vector<double> window = hann(c.window_length);

  std::vector<double> norm(length, 0.0);
  for (int m = 0; m < frames; ++m) {
    for (int i = 0; i < c.window_length; ++i) {
      norm[static_cast<std::size_t>(m) * c.hop_length + i] +=
          window[i] * window[i];
    }
  }

  RealFft fft(c.fft_size);
  std::vector<std::vector<double>> cos_phase(frames, std::vector<double>(bins, 1.0));
  std::vector<std::vector<double>> sin_phase(frames, std::vector<double>(bins, 0.0));
  std::vector<double> signal(length, 0.0);

  // Least-squares inverse of the windowed framing operator.
  auto overlap_add = [&]() {
    std::fill(signal.begin(), signal.end(), 0.0);
    for (int m = 0; m < frames; ++m) {
      fftw_complex* f = fft.freq();
      for (int k = 0; k < bins; ++k) {
        const double a = linear.values(m, k);
        f[k][0] = a * cos_phase[m][k];
        f[k][1] = a * sin_phase[m][k];
      }
      fft.inverse();
      const double* t = fft.time();
      const std::size_t start = static_cast<std::size_t>(m) * c.hop_length;
      for (int i = 0; i < c.window_length; ++i) {
        signal[start + i] += window[i] * t[i] / c.fft_size;
      }
    }
    for (std::size_t i = 0; i < length; ++i) {
      signal[i] = norm[i] > 1e-10 ? signal[i] / norm[i] : 0.0;
    }
  };

  overlap_add();
  for (int it = 0; it < c.griffin_lim_iters; ++it) {
    const Matrix mag = stft_magnitude(signal, frames, c, window, fft,
                                      &cos_phase, &sin_phase);
    if (error_trace != nullptr) {
      double err = 0.0;
      for (int m = 0; m < frames; ++m) {
        for (int k = 0; k < bins; ++k) {
          const double d = mag(m, k) - linear.values(m, k);
          const double weight = (k == 0 || 2 * k == c.fft_size) ? 1.0 : 2.0;
          err += weight * d * d;
        }
      }
      error_trace->push_back(std::sqrt(err));
    }
    overlap_add();
  }

  const std::size_t out_len = static_cast<std::size_t>(frames - 1) * c.hop_length;
  return std::vector<double>(signal.begin() + static_cast<std::ptrdiff_t>(pad),
                             signal.begin() + static_cast<std::ptrdiff_t>(pad + out_len));
}

Spectrogram log_compress(const Spectrogram& s) {
  Spectrogram out = s;
  for (double& v : out.values.values()) v = std::log1p(std::max(v, 0.0));
  return out;
}

Spectrogram log_decompress(const Spectrogram& s) {
  Spectrogram out = s;
  for (double& v : out.values.values()) v = std::max(std::expm1(v), 0.0);
  return out;
}

double spectral_snr_db(const Spectrogram& reference,
                       const Spectrogram& estimate) {
  const int frames = std::min(reference.frames(), estimate.frames());
  const int bins = std::min(reference.bins(), estimate.bins());
  double signal = 0.0, noise = 0.0;
  for (int m = 0; m < frames; ++m) {
    for (int k = 0; k < bins; ++k) {
      const double r = reference.values(m, k);
      const double d = r - estimate.values(m, k);
      signal += r * r;
      noise += d * d;
    }
  }
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

}  // namespace mrtts::dsp
