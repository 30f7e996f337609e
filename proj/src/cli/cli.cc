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

#include "mrtts/cli.h"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <filesystem>
#include <memory>

#include "json.hpp"
#include "mrtts/config.h"
#include "mrtts/corpus/dataset.h"
#include "mrtts/corpus/generator.h"
#include "mrtts/dsp/wav.h"
#include "mrtts/errors.h"
#include "mrtts/eval/classifier.h"
#include "mrtts/eval/embeddings.h"
#include "mrtts/eval/transfer.h"
#include "mrtts/inference/synthesize.h"
#include "mrtts/io.h"
#include "mrtts/model/checkpoint.h"
#include "mrtts/training/trainer.h"

namespace mrtts {

namespace fs = std::filesystem;

namespace {

void use_stderr_logger() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("mrtts");
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)once;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) {
    throw DataError(what + " not found: " + path);
  }
}

void write_json(const std::string& path, const nlohmann::ordered_json& j) {
  io::write_file_atomic(path, std::string_view(j.dump(2) + "\n"));
}

// Loads a corpus split, analysing audio with the framing stored in its
// manifest and the given mel settings.
corpus::Corpus load_split(const std::string& dir, const dsp::DspConfig& mel,
                          const std::string& split) {
  corpus::CorpusManifest manifest = corpus::load_manifest(dir);
  manifest.dsp.mel_bins = mel.mel_bins;
  manifest.dsp.mel_fmin = mel.mel_fmin;
  manifest.dsp.mel_fmax = mel.mel_fmax;
  return corpus::load_corpus(manifest, split);
}

void print_effective(std::ostream& out, const std::string& command,
                     const std::string& body) {
  out << "# effective configuration: " << command << "\n" << body;
  out.flush();
}

struct GenCorpusArgs {
  std::string spec, out;
  std::uint64_t seed = 1;
};

int gen_corpus(const GenCorpusArgs& a, std::ostream& out) {
  require_file(a.spec, "corpus spec");
  const KeyValueFile file = KeyValueFile::load(a.spec);
  const auto spec = corpus::CorpusSpec::from_config(file);
  file.reject_unknown();
  print_effective(out, "gen-corpus",
                  file.dump() + "seed = " + std::to_string(a.seed) + "\n");
  const auto manifest = corpus::generate_synthetic_corpus(spec, a.seed, a.out);
  out << "wrote " << manifest.records.size() << " utterances to " << a.out
      << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string config, corpus, out;
  bool ablate = false;
  bool resume = false;
};

int train(const TrainArgs& a, std::ostream& out) {
  require_file(a.config, "training config");
  const KeyValueFile file = KeyValueFile::load(a.config);
  auto config = training::TrainConfig::from_config(file);
  file.reject_unknown();
  if (a.ablate) config.ablate_intercross = true;
  const auto corpus = load_split(a.corpus, config.dsp, "train");
  fs::create_directories(a.out);
  const std::string effective = config.to_config().dump();
  print_effective(out, "train", effective);
  io::write_file_atomic((fs::path(a.out) / "effective.conf").string(),
                        std::string_view(effective));
  training::TrainOptions options;
  options.resume = a.resume;
  const auto summary = training::train(config, corpus, a.out, options);
  out << "finished at step " << summary.final_step << "; total loss "
      << summary.first_total << " -> " << summary.last_total << "\n";
  return kExitOk;
}

struct SynthArgs {
  std::string ckpt, text, ref1, ref2, out, attention;
  int window = inference::kAttentionWindow;
};

int synth(const SynthArgs& a, std::ostream& out) {
  require_file(a.ckpt, "checkpoint");
  require_file(a.ref1, "reference audio");
  require_file(a.ref2, "reference audio");
  dsp::DspConfig dsp;
  const auto model = model::load_model(a.ckpt, &dsp);
  const auto tokens = inference::parse_text(model->config().vocabulary, a.text);
  const std::vector<dsp::Waveform> refs = {dsp::read_wav(a.ref1),
                                           dsp::read_wav(a.ref2)};
  inference::SynthesisOptions options;
  options.attention_window = a.window;
  const auto s = inference::synthesize(*model, tokens, refs, dsp, options);
  dsp::write_wav(a.out, s.waveform);
  if (!a.attention.empty()) inference::write_attention(a.attention, s.attention);
  out << "wrote " << s.waveform.samples.size() << " samples (" << s.frames
      << " frames) to " << a.out << "\n";
  if (s.truncated) {
    spdlog::warn("decoder reached its step cap before predicting a stop");
  }
  return kExitOk;
}

struct EvalClassifierArgs {
  std::string corpus, out, config, report, split = "train";
  int dim = 1;
};

int eval_classifier(const EvalClassifierArgs& a, std::ostream& out) {
  eval::ClassifierConfig config;
  dsp::DspConfig dsp;
  if (!a.config.empty()) {
    require_file(a.config, "classifier config");
    const KeyValueFile file = KeyValueFile::load(a.config);
    config.read(file);
    dsp.read(file);
    file.reject_unknown();
  }
  const auto corpus = load_split(a.corpus, dsp, a.split);
  dsp = corpus.manifest.dsp;
  if (a.dim < 1 || a.dim > corpus.dimensions()) {
    throw UsageError("--dim must be between 1 and " +
                     std::to_string(corpus.dimensions()));
  }
  const auto trained = eval::train_eval_classifier(corpus, a.dim - 1, config);
  trained.classifier->save(a.out, dsp);
  const auto report = trained.report.to_json();
  if (!a.report.empty()) write_json(a.report, report);
  out << "validation accuracy " << trained.report.validation_accuracy << " ("
      << trained.report.validation_size << " utterances)\n";
  return kExitOk;
}

struct EvalTransferArgs {
  std::string ckpt, cls1, cls2, corpus, report, confusion_png;
  std::string split = "test";
  std::uint64_t seed = 2024;
  int max_texts = 0;
  int window = inference::kAttentionWindow;
};

int eval_transfer(const EvalTransferArgs& a, std::ostream& out) {
  for (const auto* p : {&a.ckpt, &a.cls1, &a.cls2}) require_file(*p, "checkpoint");
  dsp::DspConfig dsp;
  const auto model = model::load_model(a.ckpt, &dsp);
  const auto c1 = eval::StyleClassifier::load(a.cls1);
  const auto c2 = eval::StyleClassifier::load(a.cls2);
  if (c1->dimension() != 0 || c2->dimension() != 1) {
    throw UsageError("--cls1 and --cls2 must be the dimension 1 and 2 "
                     "classifiers");
  }
  const auto test = load_split(a.corpus, dsp, a.split);
  const eval::StyleClassifier* classifiers[] = {c1.get(), c2.get()};
  eval::TransferOptions options;
  options.seed = a.seed;
  options.max_texts = a.max_texts;
  options.attention_window = a.window;
  const auto result =
      eval::transfer_accuracy(*model, dsp, classifiers, test, options);
  auto report = result.to_json();
  report["silhouette"] =
      eval::silhouette_score(result.style_embeddings, result.style_labels);
  write_json(a.report, report);
  if (!a.confusion_png.empty()) {
    eval::plot_confusion_png(a.confusion_png, result.confusion[1]);
  }
  out << "transfer accuracy: " << test.manifest.dimensions[0].name << " "
      << result.accuracy[0] << ", " << test.manifest.dimensions[1].name << " "
      << result.accuracy[1] << " over " << result.samples.size()
      << " syntheses\n";
  return kExitOk;
}

struct ExportArgs {
  std::string cls, corpus, out, plot, split;
  int n = 25;
  std::uint64_t seed = 1;
};

int export_embeddings(const ExportArgs& a, std::ostream& out) {
  require_file(a.cls, "classifier checkpoint");
  dsp::DspConfig dsp;
  const auto cls = eval::StyleClassifier::load(a.cls, &dsp);
  const auto samples = load_split(a.corpus, dsp, a.split);
  const auto table = eval::export_embeddings(*cls, samples, a.n, a.seed);
  eval::write_embeddings_tsv(a.out, table);
  if (!a.plot.empty()) eval::plot_embeddings_png(a.plot, table);
  out << "wrote " << table.values.rows() << " embeddings to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  use_stderr_logger();
  CLI::App app{"Multi-reference style transfer text-to-speech toolkit",
               "mrtts"};
  app.require_subcommand(1);

  GenCorpusArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Render a synthetic corpus");
  gen_cmd->add_option("--spec", gen.spec, "Corpus spec file")->required();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a synthesizer");
  train_cmd->add_option("--config", tr.config, "Training config")->required();
  train_cmd->add_option("--corpus", tr.corpus, "Corpus directory")->required();
  train_cmd->add_option("--out", tr.out, "Run directory")->required();
  train_cmd->add_flag("--ablate-intercross", tr.ablate,
                      "Train only on existing class combinations");
  train_cmd->add_flag("--resume", tr.resume,
                      "Continue from <out>/checkpoint.ckpt when present");

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize one utterance");
  synth_cmd->add_option("--ckpt", sy.ckpt, "Model checkpoint")->required();
  synth_cmd->add_option("--text", sy.text, "Input symbols")->required();
  synth_cmd->add_option("--ref1", sy.ref1, "Dimension 1 reference")->required();
  synth_cmd->add_option("--ref2", sy.ref2, "Dimension 2 reference")->required();
  synth_cmd->add_option("--out", sy.out, "Output WAV")->required();
  synth_cmd->add_option("--dump-attention", sy.attention,
                        "Write the attention matrix here");
  synth_cmd->add_option("--window", sy.window,
                        "Attention window in tokens, 0 disables")
      ->check(CLI::NonNegativeNumber);

  EvalClassifierArgs ec;
  auto* ec_cmd = app.add_subcommand("eval-classifier",
                                    "Train an evaluation style classifier");
  ec_cmd->add_option("--corpus", ec.corpus, "Corpus directory")->required();
  ec_cmd->add_option("--dim", ec.dim, "Style dimension, 1-based")->required();
  ec_cmd->add_option("--out", ec.out, "Classifier checkpoint")->required();
  ec_cmd->add_option("--config", ec.config, "eval.* settings");
  ec_cmd->add_option("--report", ec.report, "JSON report");
  ec_cmd->add_option("--split", ec.split, "Corpus split to use (empty: all)");

  EvalTransferArgs et;
  auto* et_cmd = app.add_subcommand("eval-transfer",
                                    "Measure style transfer accuracy");
  et_cmd->add_option("--ckpt", et.ckpt, "Model checkpoint")->required();
  et_cmd->add_option("--cls1", et.cls1, "Dimension 1 classifier")->required();
  et_cmd->add_option("--cls2", et.cls2, "Dimension 2 classifier")->required();
  et_cmd->add_option("--corpus", et.corpus, "Corpus directory")->required();
  et_cmd->add_option("--seed", et.seed, "Reference selection seed");
  et_cmd->add_option("--report", et.report, "JSON report")->required();
  et_cmd->add_option("--confusion-png", et.confusion_png,
                     "Dimension 2 confusion image");
  et_cmd->add_option("--split", et.split, "Corpus split to use");
  et_cmd->add_option("--max-texts", et.max_texts, "Limit restricted texts");
  et_cmd->add_option("--window", et.window, "Attention window, 0 disables")
      ->check(CLI::NonNegativeNumber);

  ExportArgs ex;
  auto* ex_cmd = app.add_subcommand("export-embeddings",
                                    "Dump classifier embeddings");
  ex_cmd->add_option("--cls", ex.cls, "Classifier checkpoint")->required();
  ex_cmd->add_option("--corpus", ex.corpus, "Corpus directory")->required();
  ex_cmd->add_option("--n", ex.n, "Samples per class");
  ex_cmd->add_option("--out", ex.out, "TSV output")->required();
  ex_cmd->add_option("--plot", ex.plot, "PNG projection");
  ex_cmd->add_option("--split", ex.split, "Corpus split (empty: all)");
  ex_cmd->add_option("--seed", ex.seed, "Sample selection seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "mrtts: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return gen_corpus(gen, out);
    if (train_cmd->parsed()) return train(tr, out);
    if (synth_cmd->parsed()) return synth(sy, out);
    if (ec_cmd->parsed()) return eval_classifier(ec, out);
    if (et_cmd->parsed()) return eval_transfer(et, out);
    if (ex_cmd->parsed()) return export_embeddings(ex, out);
  } catch (const UsageError& e) {
    err << "mrtts: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "mrtts: numerical failure in " << e.term() << ": " << e.what()
        << "\n";
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "mrtts: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "mrtts: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace mrtts
