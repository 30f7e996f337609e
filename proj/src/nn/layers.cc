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

#include "mrtts/nn/layers.h"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "mrtts/errors.h"

namespace mrtts::nn {

using ad::Init;
using ad::Var;

Linear::Linear(ad::ParameterStore& store, const std::string& name, int in,
               int out, std::mt19937_64& rng)
    : w_(&store.create(name + "/w", in, out, Init::kGlorotUniform, rng)),
      b_(&store.create(name + "/b", 1, out, Init::kZeros, rng)) {}

Var Linear::operator()(ad::Tape& tape, Var x) const {
  return ad::linear(x, tape.parameter(*w_), tape.parameter(*b_));
}

Conv1d::Conv1d(ad::ParameterStore& store, const std::string& name,
               int in_channels, int out_channels, int kernel, int stride,
               std::mt19937_64& rng)
    : w_(&store.create(name + "/w", kernel * in_channels, out_channels,
                       Init::kGlorotUniform, rng)),
      b_(&store.create(name + "/b", 1, out_channels, Init::kZeros, rng)),
      kernel_(kernel),
      stride_(stride) {}

Var Conv1d::operator()(ad::Tape& tape, Var x, int items, int steps) const {
  Var cols = ad::im2col(x, items, steps, kernel_, stride_, (kernel_ - 1) / 2);
  return ad::linear(cols, tape.parameter(*w_), tape.parameter(*b_));
}

GruCell::GruCell(ad::ParameterStore& store, const std::string& name, int in,
                 int hidden, std::mt19937_64& rng)
    : wx_(&store.create(name + "/wx", in, 3 * hidden, Init::kGlorotUniform,
                        rng)),
      wh_(&store.create(name + "/wh", hidden, 3 * hidden,
                        Init::kGlorotUniform, rng)),
      bx_(&store.create(name + "/bx", 1, 3 * hidden, Init::kZeros, rng)),
      bh_(&store.create(name + "/bh", 1, 3 * hidden, Init::kZeros, rng)),
      hidden_(hidden) {}

// Gate order in the packed weights: reset, update, candidate.
Var GruCell::operator()(ad::Tape& tape, Var x, Var h) const {
  const int H = hidden_;
  Var gx = ad::linear(x, tape.parameter(*wx_), tape.parameter(*bx_));
  Var gh = ad::linear(h, tape.parameter(*wh_), tape.parameter(*bh_));
  Var rz = ad::sigmoid(
      ad::add(ad::slice_cols(gx, 0, 2 * H), ad::slice_cols(gh, 0, 2 * H)));
  Var r = ad::slice_cols(rz, 0, H);
  Var z = ad::slice_cols(rz, H, 2 * H);
  Var n = ad::tanh(ad::add(ad::slice_cols(gx, 2 * H, 3 * H),
                           ad::mul(r, ad::slice_cols(gh, 2 * H, 3 * H))));
  // h' = (1 - z) * n + z * h = n + z * (h - n)
  return ad::add(n, ad::mul(z, ad::sub(h, n)));
}

Embedding::Embedding(ad::ParameterStore& store, const std::string& name,
                     int vocab, int dim, std::mt19937_64& rng)
    : table_(&store.create(name + "/table", vocab, dim, Init::kUniformSmall,
                           rng)) {}

Var Embedding::operator()(ad::Tape& tape, std::span<const int> ids) const {
  return ad::gather_rows(tape.parameter(*table_), ids);
}

ReferenceEncoder::ReferenceEncoder(ad::ParameterStore& store,
                                   const std::string& name, const Shape& shape,
                                   std::mt19937_64& rng)
    : mel_bins_(shape.mel_bins) {
  int in = shape.mel_bins;
  for (int l = 0; l < shape.conv_layers; ++l) {
    convs_.emplace_back(store, name + "/conv" + std::to_string(l), in,
                        shape.channels, shape.kernel, 2, rng);
    in = shape.channels;
  }
  rnn_ = GruCell(store, name + "/rnn", in, shape.rnn_dim, rng);
  projection_ = Linear(store, name + "/proj", shape.rnn_dim, shape.out_dim, rng);
}

Var ReferenceEncoder::operator()(ad::Tape& tape, Var mel, int items, int steps,
                                 std::span<const int> lengths) const {
  if (steps < 1 || items < 1) {
    throw DataError("reference encoder: empty spectrogram");
  }
  if (mel.cols() != mel_bins_ || mel.rows() != items * steps) {
    throw DataError("reference encoder: expected " +
                    std::to_string(mel_bins_) + " mel bins");
  }
  std::vector<int> lens(lengths.begin(), lengths.end());
  for (int len : lens) {
    if (len < 1) throw DataError("reference encoder: empty spectrogram");
  }
  Var x = mel;
  int t = steps;
  for (const auto& conv : convs_) {
    x = ad::relu(conv(tape, x, items, t));
    t = conv.out_steps(t);
    bool full = true;
    for (int& len : lens) {
      len = (len + conv.stride() - 1) / conv.stride();
      full = full && len >= t;
    }
    if (!full) x = ad::mul_const(x, frame_mask(items, t, lens, x.cols()));
  }
  Var h = run_gru(tape, rnn_, x, items, t, lens, false, nullptr);
  return ad::tanh(projection_(tape, h));
}

Matrix frame_mask(int items, int steps, std::span<const int> lengths,
                  int cols) {
  Matrix m(items * steps, cols);
  for (int b = 0; b < items; ++b) {
    for (int t = 0; t < std::min(lengths[b], steps); ++t) {
      for (int c = 0; c < cols; ++c) m(b * steps + t, c) = 1.0;
    }
  }
  return m;
}

Var run_gru(ad::Tape& tape, const GruCell& cell, Var x, int items, int steps,
            std::span<const int> lengths, bool reverse, Var* outputs) {
  if (x.rows() != items * steps) throw std::invalid_argument("run_gru: layout");
  const int H = cell.hidden();
  Var h = tape.constant(Matrix(items, H));
  std::vector<Var> states(steps);
  std::vector<int> rows(items);
  for (int i = 0; i < steps; ++i) {
    const int t = reverse ? steps - 1 - i : i;
    for (int b = 0; b < items; ++b) rows[b] = b * steps + t;
    Var xt = ad::gather_rows(x, rows);
    Var next = cell(tape, xt, h);
    bool all_valid = true;
    Matrix mask(items, H);
    for (int b = 0; b < items; ++b) {
      if (t < lengths[b]) {
        for (int c = 0; c < H; ++c) mask(b, c) = 1.0;
      } else {
        all_valid = false;
      }
    }
    h = all_valid ? next : ad::add(h, ad::mul_const(ad::sub(next, h), mask));
    states[t] = h;
  }
  if (outputs != nullptr) {
    // step-major -> item-major
    Var stacked = ad::concat_rows(states);
    std::vector<int> perm(static_cast<std::size_t>(items) * steps);
    for (int b = 0; b < items; ++b) {
      for (int t = 0; t < steps; ++t) perm[b * steps + t] = t * items + b;
    }
    *outputs = ad::gather_rows(stacked, perm);
  }
  return h;
}

}  // namespace mrtts::nn
