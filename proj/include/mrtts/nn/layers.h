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

#ifndef MRTTS_NN_LAYERS_H_
#define MRTTS_NN_LAYERS_H_

#include <random>
#include <span>
#include <string>
#include <vector>

#include "mrtts/autodiff.h"

namespace mrtts::nn {

class Linear {
 public:
  Linear() = default;
  Linear(ad::ParameterStore& store, const std::string& name, int in, int out,
         std::mt19937_64& rng);

  ad::Var operator()(ad::Tape& tape, ad::Var x) const;
  int in() const { return w_->value.rows(); }
  int out() const { return w_->value.cols(); }

 private:
  ad::Parameter* w_ = nullptr;
  ad::Parameter* b_ = nullptr;
};

// 1-D convolution over the frame axis of item-major sequence batches, with
// "same" zero padding. The output has ceil(steps / stride) frames per item.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ad::ParameterStore& store, const std::string& name, int in_channels,
         int out_channels, int kernel, int stride, std::mt19937_64& rng);

  ad::Var operator()(ad::Tape& tape, ad::Var x, int items, int steps) const;
  int stride() const { return stride_; }
  int out_steps(int steps) const { return (steps + stride_ - 1) / stride_; }

 private:
  ad::Parameter* w_ = nullptr;
  ad::Parameter* b_ = nullptr;
  int kernel_ = 1;
  int stride_ = 1;
};

class GruCell {
 public:
  GruCell() = default;
  GruCell(ad::ParameterStore& store, const std::string& name, int in,
          int hidden, std::mt19937_64& rng);

  ad::Var operator()(ad::Tape& tape, ad::Var x, ad::Var h) const;
  int hidden() const { return hidden_; }

 private:
  ad::Parameter* wx_ = nullptr;
  ad::Parameter* wh_ = nullptr;
  ad::Parameter* bx_ = nullptr;
  ad::Parameter* bh_ = nullptr;
  int hidden_ = 0;
};

class Embedding {
 public:
  Embedding() = default;
  Embedding(ad::ParameterStore& store, const std::string& name, int vocab,
            int dim, std::mt19937_64& rng);

  ad::Var operator()(ad::Tape& tape, std::span<const int> ids) const;
  int vocab() const { return table_->value.rows(); }

 private:
  ad::Parameter* table_ = nullptr;
};

// Strided convolution stack over mel frames, a GRU over the result and a tanh
// projection of its final state: a fixed-size embedding of a variable-length
// reference. Frames past each item's length never influence the output.
class ReferenceEncoder {
 public:
  struct Shape {
    int mel_bins = 40;
    int conv_layers = 4;
    int channels = 32;
    int kernel = 3;
    int rnn_dim = 32;
    int out_dim = 32;
  };

  ReferenceEncoder() = default;
  ReferenceEncoder(ad::ParameterStore& store, const std::string& name,
                   const Shape& shape, std::mt19937_64& rng);

  // mel [items*steps x mel_bins] -> [items x out_dim]. Throws DataError for
  // empty or mis-shaped input.
  ad::Var operator()(ad::Tape& tape, ad::Var mel, int items, int steps,
                     std::span<const int> lengths) const;
  int out_dim() const { return projection_.out(); }

 private:
  std::vector<Conv1d> convs_;
  GruCell rnn_;
  Linear projection_;
  int mel_bins_ = 0;
};

// Runs `cell` over item-major frames x [items*steps x in]. Frames at or past
// an item's length leave its state untouched, so the returned state is the
// state after each item's last valid frame. With `reverse`, frames are
// consumed from the end. When `outputs` is non-null it receives the per-frame
// states laid out like x.
ad::Var run_gru(ad::Tape& tape, const GruCell& cell, ad::Var x, int items,
                int steps, std::span<const int> lengths, bool reverse,
                ad::Var* outputs);

// [items*steps x 1] column mask, 1 for frames below each item's length.
Matrix frame_mask(int items, int steps, std::span<const int> lengths,
                  int cols = 1);

}  // namespace mrtts::nn

#endif  // MRTTS_NN_LAYERS_H_
