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

#include "mrtts/eval/classifier.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mrtts/errors.h"
#include "mrtts/model/checkpoint.h"
#include "mrtts/training/optimizer.h"

namespace mrtts::eval {

using ad::Tape;
using ad::Var;

namespace {

constexpr int kInferenceBatch = 32;

PaddedSequence pad(std::span<const Matrix* const> mels) {
  return pad_sequences(mels);
}

}  // namespace

void ClassifierConfig::validate() const {
  if (conv_layers < 1 || channels < 1 || kernel < 1 || kernel % 2 == 0 ||
      rnn_dim < 1 || embedding_dim < 1 || hidden < 1 || steps < 0 ||
      batch_size < 1) {
    throw UsageError("eval: classifier sizes must be positive, kernel odd");
  }
  if (!(learning_rate > 0.0) || !(validation_fraction > 0.0) ||
      !(validation_fraction < 1.0)) {
    throw UsageError(
        "eval: learning_rate must be > 0 and validation_fraction in (0, 1)");
  }
}

void ClassifierConfig::read(const KeyValueFile& f) {
  conv_layers = f.get_int("eval.conv_layers", conv_layers);
  channels = f.get_int("eval.channels", channels);
  kernel = f.get_int("eval.kernel", kernel);
  rnn_dim = f.get_int("eval.rnn_dim", rnn_dim);
  embedding_dim = f.get_int("eval.embedding_dim", embedding_dim);
  hidden = f.get_int("eval.hidden", hidden);
  steps = f.get_int("eval.steps", steps);
  batch_size = f.get_int("eval.batch_size", batch_size);
  learning_rate = f.get_double("eval.learning_rate", learning_rate);
  validation_fraction =
      f.get_double("eval.validation_fraction", validation_fraction);
  seed = static_cast<std::uint64_t>(
      f.get_int("eval.seed", static_cast<int>(seed)));
  validate();
}

StyleClassifier::StyleClassifier(int dimension, corpus::StyleDimension labels,
                                 int mel_bins, const ClassifierConfig& config,
                                 std::uint64_t seed)
    : dimension_(dimension),
      labels_(std::move(labels)),
      mel_bins_(mel_bins),
      config_(config) {
  config.validate();
  if (labels_.classes.size() < 2) {
    throw DataError("classifier for '" + labels_.name +
                    "' needs at least two classes");
  }
  std::mt19937_64 rng(seed);
  nn::ReferenceEncoder::Shape shape;
  shape.mel_bins = mel_bins;
  shape.conv_layers = config.conv_layers;
  shape.channels = config.channels;
  shape.kernel = config.kernel;
  shape.rnn_dim = config.rnn_dim;
  shape.out_dim = config.embedding_dim;
  encoder_ = nn::ReferenceEncoder(params_, "encoder", shape, rng);
  hidden_ = nn::Linear(params_, "mlp/hidden", config.embedding_dim,
                       config.hidden, rng);
  out_ = nn::Linear(params_, "mlp/out", config.hidden, class_count(), rng);
}

Var StyleClassifier::embed(Tape& tape, const PaddedSequence& mels) const {
  return encoder_(tape, tape.constant(mels.data), mels.items, mels.steps,
                  mels.lengths);
}

Var StyleClassifier::probabilities(Tape& tape, Var embedding) const {
  Var logits = out_(tape, ad::relu(hidden_(tape, embedding)));
  return ad::masked_softmax_rows(logits,
                                 Matrix(logits.rows(), logits.cols(), 1.0));
}

Matrix StyleClassifier::embed(std::span<const Matrix> mels) const {
  Matrix out(static_cast<int>(mels.size()), embedding_dim());
  for (std::size_t begin = 0; begin < mels.size(); begin += kInferenceBatch) {
    const std::size_t end = std::min(mels.size(), begin + kInferenceBatch);
    std::vector<const Matrix*> ptrs;
    for (std::size_t k = begin; k < end; ++k) ptrs.push_back(&mels[k]);
    Tape tape(false);
    const Matrix e = embed(tape, pad(ptrs)).value();
    std::copy(e.data(), e.data() + e.size(),
              out.data() + begin * embedding_dim());
  }
  return out;
}

Matrix StyleClassifier::predict_proba(std::span<const Matrix> mels) const {
  const Matrix e = embed(mels);
  Tape tape(false);
  return probabilities(tape, tape.constant(e)).value();
}

std::vector<int> StyleClassifier::predict(std::span<const Matrix> mels) const {
  const Matrix p = predict_proba(mels);
  std::vector<int> out(p.rows());
  for (int r = 0; r < p.rows(); ++r) {
    const auto row = p.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) -
                              row.begin());
  }
  return out;
}

void StyleClassifier::save(const std::string& path,
                           const dsp::DspConfig& dsp) const {
  model::Archive a;
  a.kind = "style-classifier";
  a.meta["dimension"] = dimension_;
  a.meta["name"] = labels_.name;
  a.meta["classes"] = labels_.classes;
  a.meta["mel_bins"] = mel_bins_;
  a.meta["conv_layers"] = config_.conv_layers;
  a.meta["channels"] = config_.channels;
  a.meta["kernel"] = config_.kernel;
  a.meta["rnn_dim"] = config_.rnn_dim;
  a.meta["embedding_dim"] = config_.embedding_dim;
  a.meta["hidden"] = config_.hidden;
  a.meta["dsp"] = model::dsp_to_json(dsp);
  model::save_parameters(params_, "param/", a);
  model::write_archive(path, a);
}

std::unique_ptr<StyleClassifier> StyleClassifier::load(const std::string& path,
                                                       dsp::DspConfig* dsp) {
  const model::Archive a = model::read_archive(path);
  if (a.kind != "style-classifier") {
    throw DataError(path + ": not a style classifier archive");
  }
  std::unique_ptr<StyleClassifier> c;
  try {
    ClassifierConfig config;
    config.conv_layers = a.meta.at("conv_layers").get<int>();
    config.channels = a.meta.at("channels").get<int>();
    config.kernel = a.meta.at("kernel").get<int>();
    config.rnn_dim = a.meta.at("rnn_dim").get<int>();
    config.embedding_dim = a.meta.at("embedding_dim").get<int>();
    config.hidden = a.meta.at("hidden").get<int>();
    corpus::StyleDimension labels{
        a.meta.at("name").get<std::string>(),
        a.meta.at("classes").get<std::vector<std::string>>()};
    c = std::make_unique<StyleClassifier>(a.meta.at("dimension").get<int>(),
                                          std::move(labels),
                                          a.meta.at("mel_bins").get<int>(),
                                          config, 0);
    if (dsp != nullptr) *dsp = model::dsp_from_json(a.meta.at("dsp"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad classifier header: " + e.what());
  } catch (const UsageError& e) {
    throw DataError(path + ": " + e.what());
  }
  model::load_parameters(a, "param/", c->params());
  return c;
}

nlohmann::ordered_json ClassifierReport::to_json() const {
  nlohmann::ordered_json j;
  j["dimension"] = dimension;
  j["train_size"] = train_size;
  j["validation_size"] = validation_size;
  j["train_accuracy"] = train_accuracy;
  j["validation_accuracy"] = validation_accuracy;
  j["validation_confusion"] = validation_confusion.to_json();
  return j;
}

TrainedClassifier train_eval_classifier(const corpus::Corpus& corpus,
                                        int dimension,
                                        const ClassifierConfig& config) {
  config.validate();
  if (dimension < 0 || dimension >= corpus.dimensions()) {
    throw UsageError("dimension index " + std::to_string(dimension + 1) +
                     " outside 1.." + std::to_string(corpus.dimensions()));
  }
  const auto& labels = corpus.manifest.dimensions[dimension];
  const int classes = static_cast<int>(labels.classes.size());
  int populated = 0;
  for (const auto& members : corpus.by_class[dimension]) {
    populated += members.size() >= 2;
  }
  if (populated < 2) {
    throw DataError("dimension '" + labels.name +
                    "' needs at least two classes with two or more samples");
  }

  // stratified split
  std::mt19937_64 rng(config.seed);
  std::vector<std::vector<int>> train(classes);
  std::vector<int> validation;
  for (int c = 0; c < classes; ++c) {
    std::vector<int> members = corpus.by_class[dimension][c];
    std::shuffle(members.begin(), members.end(), rng);
    int held = static_cast<int>(
        std::lround(config.validation_fraction * members.size()));
    if (members.size() >= 2) held = std::clamp<int>(held, 1, members.size() - 1);
    else held = 0;
    validation.insert(validation.end(), members.begin(), members.begin() + held);
    train[c].assign(members.begin() + held, members.end());
  }
  std::vector<int> train_classes;
  for (int c = 0; c < classes; ++c) {
    if (!train[c].empty()) train_classes.push_back(c);
  }

  const int mel_bins = corpus.mels.empty() ? corpus.manifest.dsp.mel_bins
                                           : corpus.mels[0].cols();
  TrainedClassifier result;
  result.classifier = std::make_unique<StyleClassifier>(
      dimension, labels, mel_bins, config, config.seed + 1);
  StyleClassifier& cls = *result.classifier;
  training::Adam adam;

  std::uniform_int_distribution<std::size_t> pick_class(
      0, train_classes.size() - 1);
  for (int step = 0; step < config.steps; ++step) {
    std::vector<const Matrix*> mels;
    std::vector<int> truth;
    for (int b = 0; b < config.batch_size; ++b) {
      const int c = train_classes[pick_class(rng)];
      std::uniform_int_distribution<std::size_t> pick(0, train[c].size() - 1);
      mels.push_back(&corpus.mels[train[c][pick(rng)]]);
      truth.push_back(c);
    }
    cls.params().zero_grad();
    Tape tape;
    Var p = cls.probabilities(tape, cls.embed(tape, pad(mels)));
    Matrix pick(p.rows(), p.cols());
    for (int b = 0; b < p.rows(); ++b) pick(b, truth[b]) = 1.0;
    Var loss = ad::scale(
        ad::sum_all(ad::mul_const(ad::log_clamped(p, 1e-12), pick)),
        -1.0 / p.rows());
    if (!std::isfinite(loss.scalar())) {
      throw NumericalError("classifier", "classifier loss became non-finite");
    }
    tape.backward(loss);
    training::clip_grad_norm(cls.params(), 5.0);
    // cosine decay to a tenth of the initial rate
    const double progress = static_cast<double>(step) / config.steps;
    const double lr = config.learning_rate *
                      (0.1 + 0.45 * (1.0 + std::cos(M_PI * progress)));
    adam.step(cls.params(), lr);
    result.report.loss_trace.push_back(loss.scalar());
    if ((step + 1) % 100 == 0) {
      spdlog::info("classifier '{}' step {} loss {:.4f}", labels.name, step + 1,
                   loss.scalar());
    }
  }

  auto evaluate = [&](const std::vector<int>& positions, ConfusionMatrix& cm) {
    std::vector<Matrix> mels;
    for (int pos : positions) mels.push_back(corpus.mels[pos]);
    const auto predicted = cls.predict(mels);
    for (std::size_t k = 0; k < positions.size(); ++k) {
      cm.add(corpus.label(positions[k], dimension), predicted[k]);
    }
  };
  ClassifierReport& report = result.report;
  report.dimension = dimension;
  report.validation_confusion = ConfusionMatrix(labels.classes);
  evaluate(validation, report.validation_confusion);
  ConfusionMatrix train_cm(labels.classes);
  std::vector<int> train_all;
  for (const auto& members : train) {
    train_all.insert(train_all.end(), members.begin(), members.end());
  }
  evaluate(train_all, train_cm);
  report.train_size = static_cast<int>(train_all.size());
  report.validation_size = static_cast<int>(validation.size());
  report.train_accuracy = train_cm.accuracy();
  report.validation_accuracy = report.validation_confusion.accuracy();
  return result;
}

}  // namespace mrtts::eval
