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

#include "mrtts/model/model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <type_traits>

#include "mrtts/errors.h"

namespace mrtts::model {

using ad::Tape;
using ad::Var;

namespace {

std::string key(const std::string& name) { return "model." + name; }

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) {
      throw UsageError(std::string("model.") + name + " must be positive");
    }
  };
  positive(mel_bins, "mel_bins");
  positive(embed_dim, "embed_dim");
  positive(encoder_dim, "encoder_dim");
  positive(encoder_conv_layers, "encoder_conv_layers");
  positive(ref_conv_layers, "ref_conv_layers");
  positive(ref_channels, "ref_channels");
  positive(ref_rnn_dim, "ref_rnn_dim");
  positive(style_dim, "style_dim");
  positive(classifier_hidden, "classifier_hidden");
  positive(prenet_dim, "prenet_dim");
  positive(attention_rnn_dim, "attention_rnn_dim");
  positive(decoder_rnn_dim, "decoder_rnn_dim");
  positive(attention_dim, "attention_dim");
  positive(location_filters, "location_filters");
  positive(reduction, "reduction");
  positive(max_steps_per_token, "max_steps_per_token");
  for (auto [v, name] : {std::pair{encoder_kernel, "encoder_kernel"},
                         std::pair{ref_kernel, "ref_kernel"},
                         std::pair{location_kernel, "location_kernel"}}) {
    if (v <= 0 || v % 2 == 0) {
      throw UsageError(std::string("model.") + name +
                       " must be a positive odd number");
    }
  }
  if (encoder_dim % 2 != 0) {
    throw UsageError("model.encoder_dim must be even (two directions)");
  }
  if (!(prenet_dropout >= 0.0 && prenet_dropout < 1.0)) {
    throw UsageError("model.prenet_dropout must be in [0, 1)");
  }
  if (!(reversal_lambda >= 0.0)) {
    throw UsageError("model.reversal_lambda must be >= 0");
  }
  if (vocabulary.empty()) throw UsageError("model: empty vocabulary");
  if (dimensions.empty()) throw UsageError("model: no style dimensions");
  for (const auto& d : dimensions) {
    if (d.classes.size() < 2) {
      throw UsageError("model: dimension '" + d.name +
                       "' needs at least two classes");
    }
  }
}

void ModelConfig::read(const KeyValueFile& f) {
  mel_bins = f.get_int(key("mel_bins"), mel_bins);
  embed_dim = f.get_int(key("embed_dim"), embed_dim);
  encoder_dim = f.get_int(key("encoder_dim"), encoder_dim);
  encoder_conv_layers =
      f.get_int(key("encoder_conv_layers"), encoder_conv_layers);
  encoder_kernel = f.get_int(key("encoder_kernel"), encoder_kernel);
  ref_conv_layers = f.get_int(key("ref_conv_layers"), ref_conv_layers);
  ref_channels = f.get_int(key("ref_channels"), ref_channels);
  ref_kernel = f.get_int(key("ref_kernel"), ref_kernel);
  ref_rnn_dim = f.get_int(key("ref_rnn_dim"), ref_rnn_dim);
  style_dim = f.get_int(key("style_dim"), style_dim);
  classifier_hidden = f.get_int(key("classifier_hidden"), classifier_hidden);
  prenet_dim = f.get_int(key("prenet_dim"), prenet_dim);
  prenet_dropout = f.get_double(key("prenet_dropout"), prenet_dropout);
  attention_rnn_dim = f.get_int(key("attention_rnn_dim"), attention_rnn_dim);
  decoder_rnn_dim = f.get_int(key("decoder_rnn_dim"), decoder_rnn_dim);
  attention_dim = f.get_int(key("attention_dim"), attention_dim);
  location_filters = f.get_int(key("location_filters"), location_filters);
  location_kernel = f.get_int(key("location_kernel"), location_kernel);
  reduction = f.get_int(key("reduction"), reduction);
  reversal_lambda = f.get_double(key("reversal_lambda"), reversal_lambda);
  max_steps_per_token =
      f.get_int(key("max_steps_per_token"), max_steps_per_token);
}

void ModelConfig::write(KeyValueFile& f) const {
  auto put = [&](const std::string& name, auto v) {
    if constexpr (std::is_same_v<decltype(v), double>) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      f.set(key(name), buf);
    } else {
      f.set(key(name), std::to_string(v));
    }
  };
  put("mel_bins", mel_bins);
  put("embed_dim", embed_dim);
  put("encoder_dim", encoder_dim);
  put("encoder_conv_layers", encoder_conv_layers);
  put("encoder_kernel", encoder_kernel);
  put("ref_conv_layers", ref_conv_layers);
  put("ref_channels", ref_channels);
  put("ref_kernel", ref_kernel);
  put("ref_rnn_dim", ref_rnn_dim);
  put("style_dim", style_dim);
  put("classifier_hidden", classifier_hidden);
  put("prenet_dim", prenet_dim);
  put("prenet_dropout", prenet_dropout);
  put("attention_rnn_dim", attention_rnn_dim);
  put("decoder_rnn_dim", decoder_rnn_dim);
  put("attention_dim", attention_dim);
  put("location_filters", location_filters);
  put("location_kernel", location_kernel);
  put("reduction", reduction);
  put("reversal_lambda", reversal_lambda);
  put("max_steps_per_token", max_steps_per_token);
}

Model::Model(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  const ModelConfig& c = config_;
  std::mt19937_64 rng(seed);

  embedding_ = nn::Embedding(params_, "text/embedding", c.vocab_size(),
                             c.embed_dim, rng);
  int width = c.embed_dim;
  for (int l = 0; l < c.encoder_conv_layers; ++l) {
    encoder_convs_.emplace_back(params_, "text/conv" + std::to_string(l),
                                width, c.encoder_dim, c.encoder_kernel, 1,
                                rng);
    width = c.encoder_dim;
  }
  encoder_fwd_ =
      nn::GruCell(params_, "text/rnn_fwd", width, c.encoder_dim / 2, rng);
  encoder_bwd_ =
      nn::GruCell(params_, "text/rnn_bwd", width, c.encoder_dim / 2, rng);

  const int dims = c.dimension_count();
  for (int d = 0; d < dims; ++d) {
    const std::string base = "ref" + std::to_string(d);
    nn::ReferenceEncoder::Shape shape;
    shape.mel_bins = c.mel_bins;
    shape.conv_layers = c.ref_conv_layers;
    shape.channels = c.ref_channels;
    shape.kernel = c.ref_kernel;
    shape.rnn_dim = c.ref_rnn_dim;
    shape.out_dim = c.style_dim;
    references_.emplace_back(params_, base, shape, rng);
  }
  classifiers_.resize(dims);
  for (int i = 0; i < dims; ++i) {
    for (int j = 0; j < dims; ++j) {
      const std::string base =
          "cls" + std::to_string(i) + "_" + std::to_string(j) + "/";
      classifiers_[i].push_back(
          {nn::Linear(params_, base + "hidden", c.style_dim,
                      c.classifier_hidden, rng),
           nn::Linear(params_, base + "out", c.classifier_hidden,
                      c.class_count(j), rng)});
    }
  }

  prenet1_ = nn::Linear(params_, "dec/prenet1", c.mel_bins, c.prenet_dim, rng);
  prenet2_ =
      nn::Linear(params_, "dec/prenet2", c.prenet_dim, c.prenet_dim, rng);
  attention_rnn_ = nn::GruCell(params_, "dec/attention_rnn",
                               c.prenet_dim + c.encoder_dim,
                               c.attention_rnn_dim, rng);
  query_ = nn::Linear(params_, "dec/attention/query", c.attention_rnn_dim,
                      c.attention_dim, rng);
  memory_key_ = nn::Linear(params_, "dec/attention/memory", c.encoder_dim,
                           c.attention_dim, rng);
  location_conv_ = nn::Linear(params_, "dec/attention/location_conv",
                              2 * c.location_kernel, c.location_filters, rng);
  location_dense_ = nn::Linear(params_, "dec/attention/location_dense",
                               c.location_filters, c.attention_dim, rng);
  energy_ = nn::Linear(params_, "dec/attention/energy", c.attention_dim, 1,
                       rng);
  decoder_rnn_ = nn::GruCell(
      params_, "dec/decoder_rnn",
      c.attention_rnn_dim + c.encoder_dim + dims * c.style_dim,
      c.decoder_rnn_dim, rng);
  frame_out_ = nn::Linear(params_, "dec/frame_out",
                          c.decoder_rnn_dim + c.encoder_dim,
                          c.reduction * c.mel_bins, rng);
  stop_out_ = nn::Linear(params_, "dec/stop_out",
                         c.decoder_rnn_dim + c.encoder_dim, 1, rng);
}

WindowBounds window_bounds(int prev_argmax, int window, int length) {
  return {std::clamp(prev_argmax - window, 0, length - 1),
          std::clamp(prev_argmax + window, 0, length - 1)};
}

Var Model::masked(Var x, int items, int steps,
                  std::span<const int> lengths) const {
  bool full = true;
  for (int b = 0; b < items; ++b) full = full && lengths[b] >= steps;
  if (full) return x;
  return ad::mul_const(x, nn::frame_mask(items, steps, lengths, x.cols()));
}

Var Model::dropout(Tape&, Var x, double rate, const Mode& mode) const {
  if (!mode.training || rate <= 0.0) return x;
  if (mode.rng == nullptr) {
    throw std::invalid_argument("training mode needs a dropout rng");
  }
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(x.rows(), x.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = keep(*mode.rng) ? 1.0 / (1.0 - rate) : 0.0;
  }
  return ad::mul_const(x, mask);
}

Var Model::prenet(Tape& tape, Var frame, const Mode& mode) const {
  Var h = dropout(tape, ad::relu(prenet1_(tape, frame)),
                  config_.prenet_dropout, mode);
  return dropout(tape, ad::relu(prenet2_(tape, h)), config_.prenet_dropout,
                 mode);
}

Var Model::encode_text(Tape& tape, const TokenBatch& text,
                       const Mode& /*mode*/) const {
  const int vocab = config_.vocab_size();
  for (int b = 0; b < text.items; ++b) {
    if (text.lengths[b] < 1) {
      throw DataError("encode_text: item " + std::to_string(b) +
                      " has no tokens");
    }
    for (int t = 0; t < text.lengths[b]; ++t) {
      const int id = text.ids[static_cast<std::size_t>(b) * text.steps + t];
      if (id < 0 || id >= vocab) {
        throw DataError("encode_text: token id " + std::to_string(id) +
                        " outside the vocabulary at item " +
                        std::to_string(b) + ", position " + std::to_string(t));
      }
    }
  }
  Var x = embedding_(tape, text.ids);
  for (const auto& conv : encoder_convs_) {
    x = masked(ad::relu(conv(tape, x, text.items, text.steps)), text.items,
               text.steps, text.lengths);
  }
  Var fwd, bwd;
  nn::run_gru(tape, encoder_fwd_, x, text.items, text.steps, text.lengths,
              false, &fwd);
  nn::run_gru(tape, encoder_bwd_, x, text.items, text.steps, text.lengths,
              true, &bwd);
  return masked(ad::concat_cols({fwd, bwd}), text.items, text.steps,
                text.lengths);
}

Var Model::encode_reference(Tape& tape, int dimension, Var mel, int items,
                            int steps, std::span<const int> lengths,
                            const Mode&) const {
  if (dimension < 0 || dimension >= config_.dimension_count()) {
    throw std::out_of_range("encode_reference: bad dimension index");
  }
  if (steps < 1 || items < 1) {
    throw DataError("encode_reference: empty spectrogram");
  }
  if (mel.cols() != config_.mel_bins || mel.rows() != items * steps) {
    throw DataError("encode_reference: expected " +
                    std::to_string(config_.mel_bins) + " mel bins");
  }
  for (int b = 0; b < items; ++b) {
    if (lengths[b] < 1) throw DataError("encode_reference: empty spectrogram");
  }
  return references_[dimension](tape, mel, items, steps, lengths);
}

Var Model::encode_reference(Tape& tape, int dimension,
                            const PaddedSequence& mel,
                            const Mode& mode) const {
  return encode_reference(tape, dimension, tape.constant(mel.data), mel.items,
                          mel.steps, mel.lengths, mode);
}

Var Model::classify_plain(Tape& tape, Var e, int i, int j) const {
  if (e.cols() != config_.style_dim) {
    throw DataError("classify: embedding has " + std::to_string(e.cols()) +
                    " entries, expected " + std::to_string(config_.style_dim));
  }
  const Classifier& cls = classifiers_.at(i).at(j);
  Var logits = cls.out(tape, ad::relu(cls.hidden(tape, e)));
  Matrix all(logits.rows(), logits.cols());
  all.fill(1.0);
  return ad::masked_softmax_rows(logits, all);
}

Var Model::classify(Tape& tape, Var e, int i, int j,
                    double lambda_override) const {
  if (i != j) {
    e = ad::gradient_reversal(
        e, lambda_override >= 0.0 ? lambda_override : config_.reversal_lambda);
  }
  return classify_plain(tape, e, i, j);
}

DecoderOutput Model::decode_teacher(Tape& tape, Var memory,
                                    const TokenBatch& text,
                                    std::span<const Var> styles,
                                    const PaddedSequence& teacher,
                                    const Mode& mode) const {
  return run_decoder(tape, memory, text, styles, &teacher, mode, {});
}

DecoderOutput Model::decode_free(Tape& tape, Var memory,
                                 const TokenBatch& text,
                                 std::span<const Var> styles,
                                 const Mode& mode,
                                 const DecodeOptions& options) const {
  return run_decoder(tape, memory, text, styles, nullptr, mode, options);
}

DecoderOutput Model::run_decoder(Tape& tape, Var memory,
                                 const TokenBatch& text,
                                 std::span<const Var> styles,
                                 const PaddedSequence* teacher,
                                 const Mode& mode,
                                 const DecodeOptions& options) const {
  const ModelConfig& c = config_;
  const int items = text.items;
  const int tokens = text.steps;
  const int r = c.reduction;
  const int mels = c.mel_bins;
  if (static_cast<int>(styles.size()) != c.dimension_count()) {
    throw std::invalid_argument("decode: one style embedding per dimension");
  }
  if (memory.rows() != items * tokens) {
    throw std::invalid_argument("decode: memory does not match text batch");
  }

  int total_steps = 0;
  std::vector<int> caps(items);
  if (teacher != nullptr) {
    if (teacher->items != items || teacher->steps % r != 0 ||
        teacher->data.cols() != mels) {
      throw std::invalid_argument(
          "decode: teacher must match the batch and be padded to a multiple "
          "of the reduction factor");
    }
    total_steps = teacher->steps / r;
  } else {
    for (int b = 0; b < items; ++b) {
      caps[b] = c.max_steps_per_token * text.lengths[b];
      total_steps = std::max(total_steps, caps[b]);
    }
  }

  Matrix token_mask(items, tokens);
  for (int b = 0; b < items; ++b) {
    for (int j = 0; j < text.lengths[b]; ++j) token_mask(b, j) = 1.0;
  }
  Var keys = memory_key_(tape, memory);
  Var style = ad::concat_cols(styles);
  Var h_att = tape.constant(Matrix(items, c.attention_rnn_dim));
  Var h_dec = tape.constant(Matrix(items, c.decoder_rnn_dim));
  Var context = tape.constant(Matrix(items, c.encoder_dim));
  Var attn_prev = tape.constant(Matrix(items, tokens));
  Var attn_cum = attn_prev;
  Var frame = tape.constant(Matrix(items, mels));
  Var teacher_frames;
  if (teacher != nullptr) teacher_frames = tape.constant(teacher->data);

  DecoderOutput out;
  out.items = items;
  out.reduction = r;
  out.frames.assign(items, 0);
  out.truncated.assign(items, false);
  std::vector<std::vector<double>> attention_rows(items);
  std::vector<int> argmax(items, 0);
  std::vector<bool> done(items, false);
  std::vector<Var> frame_steps, stop_steps;
  std::vector<int> rows(items);

  for (int s = 0; s < total_steps; ++s) {
    if (teacher != nullptr && s > 0) {
      for (int b = 0; b < items; ++b) rows[b] = b * teacher->steps + s * r - 1;
      frame = ad::gather_rows(teacher_frames, rows);
    }
    Var pre = prenet(tape, frame, mode);
    h_att = attention_rnn_(tape, ad::concat_cols({pre, context}), h_att);

    Var query = ad::repeat_rows(query_(tape, h_att), tokens);
    Var location = ad::concat_cols({ad::reshape(attn_prev, items * tokens, 1),
                                    ad::reshape(attn_cum, items * tokens, 1)});
    location = ad::im2col(location, items, tokens, c.location_kernel, 1,
                          (c.location_kernel - 1) / 2);
    location = location_dense_(tape, location_conv_(tape, location));
    Var energies = energy_(tape, ad::tanh(ad::add(ad::add(query, keys),
                                                  location)));
    energies = ad::reshape(energies, items, tokens);

    Matrix mask = token_mask;
    if (options.attention_window > 0) {
      for (int b = 0; b < items; ++b) {
        const auto [lo, hi] = window_bounds(
            argmax[b], options.attention_window, text.lengths[b]);
        for (int j = 0; j < tokens; ++j) {
          if (j < lo || j > hi) mask(b, j) = 0.0;
        }
      }
    }
    Var weights = ad::masked_softmax_rows(energies, mask);
    context = ad::attend(weights, memory);
    attn_cum = ad::add(attn_cum, weights);
    attn_prev = weights;

    h_dec = decoder_rnn_(tape, ad::concat_cols({h_att, context, style}),
                         h_dec);
    Var features = ad::concat_cols({h_dec, context});
    Var frames = frame_out_(tape, features);
    Var stop = stop_out_(tape, features);
    frame_steps.push_back(frames);
    stop_steps.push_back(stop);

    const Matrix& w = weights.value();
    for (int b = 0; b < items; ++b) {
      int best = 0;
      for (int j = 0; j < text.lengths[b]; ++j) {
        attention_rows[b].push_back(w(b, j));
        if (w(b, j) > w(b, best)) best = j;
      }
      argmax[b] = best;
    }
    out.steps = s + 1;

    if (teacher == nullptr) {
      frame = ad::slice_cols(frames, (r - 1) * mels, r * mels);
      bool all_done = true;
      for (int b = 0; b < items; ++b) {
        if (done[b]) continue;
        out.frames[b] = (s + 1) * r;
        if (stop.value()(b, 0) > 0.0) {
          done[b] = true;
        } else if (s + 1 >= caps[b]) {
          done[b] = true;
          out.truncated[b] = true;
        }
        all_done = all_done && done[b];
      }
      if (all_done) break;
    }
  }
  if (teacher != nullptr) out.frames.assign(items, out.steps * r);

  out.mel = ad::reshape(ad::concat_cols(frame_steps), items * out.steps * r,
                        mels);
  out.stop_logits = ad::concat_cols(stop_steps);
  for (int b = 0; b < items; ++b) {
    const int len = text.lengths[b];
    Matrix a(out.steps, len);
    std::copy(attention_rows[b].begin(), attention_rows[b].end(), a.data());
    out.attention.push_back(std::move(a));
  }
  return out;
}

}  // namespace mrtts::model
