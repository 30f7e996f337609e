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

// Runs the acceptance criteria and prints one PASS/FAIL line for each.
//
//   acceptance [--only 1,2,...] [--work DIR] [--reuse]
//
// Criteria 7 and 8 drive the `mrtts` command suite end to end over a
// generated corpus in --work (default ./acceptance_work), starting from a
// clean directory unless --reuse is given.

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include "fixtures.h"
#include "json.hpp"
#include "mrtts/autodiff.h"
#include "mrtts/cli.h"
#include "mrtts/corpus/manifest.h"
#include "mrtts/dsp/spectrogram.h"
#include "mrtts/errors.h"
#include "mrtts/inference/synthesize.h"
#include "mrtts/io.h"
#include "mrtts/losses/losses.h"
#include "mrtts/training/trainer.h"

using namespace mrtts;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records a named condition; the criterion passes only if all hold.
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + ("failed: " + what);
    }
  }
  void note(const std::string& text) {
    detail += (detail.empty() ? "" : "; ") + text;
  }
};

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

bool close(double a, double b, double tol = 1e-6) {
  return std::abs(a - b) <= tol;
}

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = dist(rng);
  return m;
}

// 1. ---------------------------------------------------------------------

training::TrainConfig small_train_config(const corpus::Corpus& c) {
  training::TrainConfig config;
  config.model = testing::tiny_model_config(c);
  config.dsp.mel_bins = 6;
  config.n_pairs = 2;
  config.finetune = false;
  config.learning_rate = 3e-3;
  config.seed = 17;
  return config;
}

Outcome loss_oracles() {
  using namespace losses;
  Outcome o;
  const Matrix ones22(2, 2, 1.0);
  const Matrix t({{1, 2}, {3, 4}});
  o.require(close(recon_loss(t, t, ones22), 0.0), "recon identical");
  o.require(close(recon_loss(Matrix(3, 5), Matrix(3, 5, 1.0), Matrix(3, 5, 1.0)),
                  1.0),
            "recon zeros vs ones");
  o.require(close(recon_loss(t, Matrix(2, 2, 1.0), ones22), 1.5),
            "recon hand example");

  const int l0[] = {0};
  o.require(close(cls_loss(Matrix({{1.0, 0.0}}), l0), 0.0), "cls certain");
  for (int label = 0; label < 4; ++label) {
    const int l[] = {label};
    o.require(close(cls_loss(Matrix(1, 4, 0.25), l), std::log(4.0)),
              "cls uniform over 4");
  }
  o.require(close(cls_loss(Matrix({{0.5, 0.5}}), l0), 0.6931471805599453),
            "cls half");

  const LossWeights w;
  o.require(close(adv_cycle_loss(1.0, 2.0, 3.0, w), 3.03), "adv (1,2,3)");
  o.require(close(adv_cycle_loss(0.0, 0.0, 0.0, w), 0.0), "adv zeros");
  o.require(close(adv_cycle_loss(0.7, std::nullopt, std::nullopt, w), 0.7),
            "adv without unpaired");

  o.require(close(ortho_loss(Matrix({{1, 0}}), Matrix({{0, 1}})), 0.0),
            "ortho orthogonal");
  o.require(close(ortho_loss(Matrix({{1, 0}}), Matrix({{1, 0}})), 1.0),
            "ortho parallel");
  o.require(close(ortho_loss(Matrix({{2, 0}}), Matrix({{1, 1}})), 2.0),
            "ortho (2,0).(1,1)");

  LossReport parts;
  parts.recon = 1.0;
  parts.adv_cycle = 2.0;
  parts.ortho = 5.0;
  o.require(close(total_loss(parts, w), 3.1), "total (1,2,5)");
  o.require(close(total_loss(LossReport{}, w), 0.0), "total zeros");
  LossWeights no_ortho = w;
  no_ortho.gamma = 0.0;
  const double base = total_loss(parts, no_ortho);
  parts.ortho = 99.0;
  o.require(total_loss(parts, no_ortho) == base, "gamma 0 ignores ortho");

  // Reports produced by real training batches recompose from their parts.
  const auto c = testing::table1_memory_corpus(6, 3, 5, 6);
  const auto config = small_train_config(c);
  auto state = training::init_state(config, c.manifest);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    std::mt19937_64 brng(100 + k);
    const auto batch = corpus::make_batch(c, brng, 2, true,
                                          config.model.reduction);
    std::mt19937_64 rng(k);
    const auto r = training::forward_backward(
        state, batch, config, training::ObjectiveScales::main_stage(config),
        rng, false);
    const auto& p = r.report;
    const auto& cw = config.weights;
    worst = std::max(
        {worst,
         std::abs(p.total - (cw.alpha * p.recon + cw.beta * p.adv_cycle +
                             cw.gamma * p.ortho)),
         std::abs(p.adv_cycle - (p.cls_paired + p.cls_unpaired +
                                 cw.delta * p.cls_synthesized))});
  }
  o.require(worst <= 1e-6, "report recomposition");
  o.note("recomposition error " + sci(worst));
  return o;
}

// 2. ---------------------------------------------------------------------

Outcome gradient_reversal() {
  Outcome o;
  std::mt19937_64 rng(21);
  const Matrix x = random_matrix(3, 4, rng);
  const Matrix weights = random_matrix(3, 4, rng);
  {
    ad::Tape tape;
    const auto v = tape.leaf(x);
    const Matrix& y = ad::gradient_reversal(v, 1.0).value();
    bool same = true;
    for (std::size_t i = 0; i < x.size(); ++i) same = same && y[i] == x[i];
    o.require(same, "forward identity");
  }

  // f(x) = sum(weights * tanh(x)^2), composed after the reversal layer.
  auto f = [&](const Matrix& in) {
    double s = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      s += weights[i] * std::tanh(in[i]) * std::tanh(in[i]);
    }
    return s;
  };
  ad::Tape tape;
  const auto v = tape.leaf(x);
  const auto th = ad::tanh(ad::gradient_reversal(v, 1.0));
  tape.backward(ad::sum_all(ad::mul_const(ad::mul(th, th), weights)));
  const Matrix analytic = tape.grad_of(v);
  double worst = 0.0;
  const double h = 1e-6;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Matrix up = x, down = x;
    up[i] += h;
    down[i] -= h;
    const double numeric = (f(up) - f(down)) / (2 * h);
    worst = std::max(worst, std::abs(analytic[i] + numeric) /
                                std::max(std::abs(numeric), 1e-8));
  }
  o.require(worst <= 1e-5, "composed gradient vs negated finite difference");

  const auto c = testing::table1_memory_corpus(4, 4, 3, 6);
  model::ModelConfig mc;
  mc.vocabulary = c.manifest.vocabulary;
  mc.dimensions = c.manifest.dimensions;
  const model::Model m(mc, 7);
  const Matrix e0 = random_matrix(5, mc.style_dim, rng);
  const std::vector<int> labels = {0, 1, 2, 3, 1};
  auto grad = [&](bool reversed) {
    ad::Tape t;
    const auto e = t.leaf(e0);
    const auto p = reversed ? m.classify(t, e, 0, 1, 1.0)
                            : m.classify_plain(t, e, 0, 1);
    const losses::Prediction pred{p, labels};
    t.backward(losses::cls_loss(std::span(&pred, 1)));
    return t.grad_of(e);
  };
  const Matrix through = grad(true), plain = grad(false);
  double path = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    path = std::max(path, std::abs(through[i] + plain[i]) /
                              std::max(std::abs(plain[i]), 1e-12));
    norm += std::abs(plain[i]);
  }
  o.require(path <= 1e-5 && norm > 0.0, "classifier path negation");
  o.note("composed rel err " + sci(worst) + ", classifier path " + sci(path));
  return o;
}

// 3. ---------------------------------------------------------------------

Outcome sampler_coverage() {
  Outcome o;
  const auto c = testing::table1_memory_corpus(400, 400, 1, 6);
  std::mt19937_64 rng(2024);
  std::set<std::pair<int, int>> seen;
  for (int i = 0; i < 10000; ++i) {
    const auto t = corpus::sample_unpaired_triplet(c, rng);
    seen.insert({t.ref_labels[0][0], t.ref_labels[1][1]});
  }
  int empty_cells = 0;
  for (const auto& [a, b] : seen) {
    empty_cells += !c.manifest.disjointness_map[a][b];
  }
  o.require(seen.size() == 8, "all 8 reference combinations");
  o.require(empty_cells == 3, "the 3 empty cells");

  int valid = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto t = corpus::sample_paired_triplet(c, rng);
    const int own = t.paired_form;
    const int other = 1 - own;
    bool ok = t.has_target() && own >= 0 && t.refs[own] == t.text &&
              c.label(t.refs[other], other) == c.label(t.text, other) &&
              (t.fallback || t.refs[other] != t.text);
    for (int j = 0; j < 2; ++j) {
      ok = ok && t.ref_labels[own][j] == c.label(t.text, j);
    }
    valid += ok;
  }
  o.require(valid == 10000, "paired label invariants");
  o.note(std::to_string(seen.size()) + " combinations, " +
         std::to_string(valid) + "/10000 paired valid");
  return o;
}

// 4. ---------------------------------------------------------------------

Outcome attention_window() {
  Outcome o;
  const auto c = testing::table1_memory_corpus(4, 4, 3, 40);
  model::ModelConfig mc;
  mc.vocabulary = c.manifest.vocabulary;
  mc.dimensions = c.manifest.dimensions;
  const model::Model m(mc, 13);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> tok(0, mc.vocab_size() - 1);
  std::uniform_int_distribution<int> len(8, 30), frames(40, 200);
  dsp::DspConfig dsp;
  int steps = 0, worst_jump = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> tokens(len(rng));
    for (int& t : tokens) t = tok(rng);
    std::vector<Matrix> refs;
    for (int d = 0; d < 2; ++d) {
      Matrix r(frames(rng), dsp.mel_bins);
      std::uniform_real_distribution<double> u(0.0, 1.5);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = u(rng);
      refs.push_back(std::move(r));
    }
    inference::SynthesisOptions opts;
    opts.vocode = false;
    const auto s = inference::synthesize_from_mels(m, tokens, refs, dsp, opts);
    for (std::size_t k = 1; k < s.argmax.size(); ++k) {
      worst_jump = std::max(worst_jump, std::abs(s.argmax[k] - s.argmax[k - 1]));
      ++steps;
    }
  }
  o.require(worst_jump <= 7, "argmax jump <= 7");
  o.require(steps > 0, "decoder steps taken");
  o.note("50 syntheses, " + std::to_string(steps) + " steps, largest jump " +
         std::to_string(worst_jump));
  return o;
}

// 5. ---------------------------------------------------------------------

Outcome griffin_lim() {
  Outcome o;
  dsp::DspConfig config;
  corpus::CorpusSpec spec;
  spec.dimensions = {{"speaker", {"a", "b"}}, {"emotion", {"n", "s", "x", "h"}}};
  spec.counts = {{1, 1, 1, 1}, {1, 1, 1, 1}};
  std::mt19937_64 rng(11);
  const auto wave = corpus::render_utterance(spec, {0, 5, 9, 2, 14, 7}, 1, 2, rng);
  const auto a = dsp::analyze(wave, config);
  std::vector<double> trace;
  const auto rebuilt = dsp::griffin_lim(a.linear, config, &trace);
  bool monotone = trace.size() == 60;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    monotone = monotone && trace[k] <= trace[k - 1] * (1 + 1e-12);
  }
  o.require(monotone, "error non-increasing over 60 iterations");
  const double snr =
      dsp::spectral_snr_db(a.linear, dsp::analyze(rebuilt, config).linear);
  o.require(snr >= 10.0, "round-trip SNR >= 10 dB");

  std::vector<double> sine(16000);
  for (std::size_t n = 0; n < sine.size(); ++n) {
    sine[n] = 0.5 * std::sin(2 * std::numbers::pi * 440.0 * n / 16000.0);
  }
  const auto sa = dsp::analyze(sine, config);
  const auto again = dsp::analyze(dsp::griffin_lim(sa.linear, config), config);
  const int expected =
      static_cast<int>(std::lround(440.0 * config.fft_size / config.sample_rate));
  int worst = 0;
  const Matrix& lin = again.linear.values;
  for (int f = 4; f < again.linear.frames() - 4; ++f) {
    int best = 0;
    for (int b = 1; b < lin.cols(); ++b) {
      if (lin(f, b) > lin(f, best)) best = b;
    }
    worst = std::max(worst, std::abs(best - expected));
  }
  o.require(worst <= 1, "sine peak within one bin");
  o.note("SNR " + fixed(snr, 1) + " dB, final error " + sci(trace.back()) +
         ", peak offset " + std::to_string(worst));
  return o;
}

// 6. ---------------------------------------------------------------------

double grad_abs_sum(ad::ParameterStore& store, const std::string& prefix) {
  double s = 0.0;
  for (auto* p : store.with_prefix(prefix)) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) s += std::abs(p->grad[i]);
  }
  return s;
}

Outcome training_smoke(const fs::path& work) {
  using namespace training;
  Outcome o;
  const auto c = testing::table1_memory_corpus(6, 3, 5, 6);
  const auto config = small_train_config(c);
  std::mt19937_64 brng(21);
  const auto batch = corpus::make_batch(c, brng, 2, true, config.model.reduction);
  auto state = init_state(config, c.manifest);
  double first = 0.0, last = 0.0;
  for (int s = 0; s < 50; ++s) {
    std::mt19937_64 rng = step_rng(config.seed, s);
    const auto r = train_step(state, batch, config, rng);
    if (s == 0) first = r.report.total;
    last = r.report.total;
  }
  o.require(last < first, "50 steps reduce the total loss");

  fs::create_directories(work);
  const std::string path = (work / "smoke.ckpt").string();
  save_state(path, state, config);
  auto loaded = load_state(path);
  std::mt19937_64 pr(77);
  const auto probe = corpus::make_batch(c, pr, 2, true, config.model.reduction);
  std::mt19937_64 r1(5), r2(5);
  const auto a = forward_backward(state, probe, config,
                                  ObjectiveScales::main_stage(config), r1, false);
  const auto b = forward_backward(loaded, probe, config,
                                  ObjectiveScales::main_stage(config), r2, false);
  const auto& x = a.report;
  const auto& y = b.report;
  o.require(x.recon == y.recon && x.cls_paired == y.cls_paired &&
                x.cls_unpaired == y.cls_unpaired &&
                x.cls_synthesized == y.cls_synthesized &&
                x.adv_cycle == y.adv_cycle && x.ortho == y.ortho &&
                x.total == y.total && x.stop == y.stop,
            "checkpoint reproduces the report bit-exactly");

  std::mt19937_64 urng(6);
  std::vector<corpus::Triplet> triplets;
  for (int k = 0; k < 3; ++k) {
    triplets.push_back(corpus::sample_unpaired_triplet(c, urng));
  }
  const auto unpaired = corpus::collate(c, triplets, config.model.reduction);
  auto fresh = init_state(config, c.manifest);
  std::mt19937_64 rng(2);
  const auto r = forward_backward(fresh, unpaired, config,
                                  ObjectiveScales::main_stage(config), rng, true);
  o.require(r.report.recon == 0.0, "unpaired-only recon is 0");
  ObjectiveScales only;
  only.recon = only.cls_paired = only.cls_unpaired = only.ortho = 0.0;
  only.stop = only.game = 0.0;
  only.cls_synthesized = 1.0;
  auto iso = init_state(config, c.manifest);
  std::mt19937_64 rng2(2);
  forward_backward(iso, unpaired, config, only, rng2, true);
  const double dec = grad_abs_sum(iso.model->params(), "dec/");
  o.require(dec > 0.0, "cls_synthesized reaches the decoder");
  o.note("total " + fixed(first, 4) + " -> " + fixed(last, 4) +
         ", decoder grad mass " + sci(dec));
  return o;
}

// 7 and 8. ---------------------------------------------------------------

json read_json(const fs::path& path) {
  return json::parse(io::read_file(path.string()));
}

// Runs one `mrtts` subcommand; a non-zero exit aborts the criterion.
void mrtts_run(std::vector<std::string> args) {
  std::string line = "mrtts";
  for (const auto& a : args) line += " " + a;
  spdlog::info("{}", line);
  std::ostringstream out;
  const int code = run_cli(args, out, std::cerr);
  if (code != 0) {
    throw std::runtime_error("`" + line + "` exited with " +
                             std::to_string(code));
  }
}

struct Desk {
  fs::path work;
  fs::path configs;
  bool reuse = false;

  std::string at(const std::string& name) const {
    return (work / name).string();
  }
  std::string config(const std::string& name) const {
    return (configs / name).string();
  }
  bool have(const std::string& name) const {
    return reuse && fs::exists(work / name);
  }

  void classifiers() {
    if (!have("crossed/manifest.jsonl")) {
      mrtts_run({"gen-corpus", "--spec", config("crossed.conf"), "--out",
                 at("crossed"), "--seed", "12"});
    }
    for (const char* dim : {"1", "2"}) {
      const std::string name = std::string("cls") + dim;
      if (have(name + ".json")) continue;
      mrtts_run({"eval-classifier", "--corpus", at("crossed"), "--dim", dim,
                 "--config", config("eval.conf"), "--out", at(name + ".ckpt"),
                 "--report", at(name + ".json")});
    }
  }

  void transfer(const std::string& run, bool ablate) {
    if (!have("table1/manifest.jsonl")) {
      mrtts_run({"gen-corpus", "--spec", config("table1.conf"), "--out",
                 at("table1"), "--seed", "11"});
    }
    if (!have(run + "/model.ckpt")) {
      std::vector<std::string> args = {"train", "--config", config("desk.conf"),
                                       "--corpus", at("table1"), "--out",
                                       at(run), "--resume"};
      if (ablate) args.push_back("--ablate-intercross");
      mrtts_run(args);
    }
    if (!have(run + "_transfer.json")) {
      mrtts_run({"eval-transfer", "--ckpt", at(run + "/model.ckpt"), "--cls1",
                 at("cls1.ckpt"), "--cls2", at("cls2.ckpt"), "--corpus",
                 at("table1"), "--seed", "2024", "--report",
                 at(run + "_transfer.json"), "--confusion-png",
                 at(run + "_confusion.png")});
    }
  }
};

Outcome eval_classifiers(Desk& desk) {
  Outcome o;
  desk.classifiers();
  const double a1 = read_json(desk.at("cls1.json"))["validation_accuracy"];
  const double a2 = read_json(desk.at("cls2.json"))["validation_accuracy"];
  o.require(a1 >= 0.99, "dimension 1 >= 0.99");
  o.require(a2 >= 0.95, "dimension 2 >= 0.95");
  o.note("validation accuracy " + fixed(a1) + " / " + fixed(a2));
  return o;
}

Outcome desk_transfer(Desk& desk) {
  Outcome o;
  desk.classifiers();
  desk.transfer("full", false);
  desk.transfer("ablation", true);
  const json full = read_json(desk.at("full_transfer.json"));
  const json abl = read_json(desk.at("ablation_transfer.json"));
  const double f1 = full["accuracy"][0], f2 = full["accuracy"][1];
  const double a1 = abl["accuracy"][0], a2 = abl["accuracy"][1];
  const double fs_ = full["silhouette"], as = abl["silhouette"];

  // The dimension-2 class the restricted dimension-1 class is confined to.
  const auto manifest = corpus::load_manifest(desk.at("table1"));
  const int restricted = abl["restricted_classes"][0];
  int confined = 0;
  for (std::size_t k = 0; k < manifest.disjointness_map[restricted].size(); ++k) {
    if (manifest.disjointness_map[restricted][k]) confined = static_cast<int>(k);
  }
  const auto counts =
      abl["confusion"][1]["counts"].get<std::vector<std::vector<int>>>();
  int errors = 0, into_confined = 0;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    for (std::size_t p = 0; p < counts[t].size(); ++p) {
      if (t == p) continue;
      errors += counts[t][p];
      if (static_cast<int>(p) == confined) into_confined += counts[t][p];
    }
  }
  const double concentration = errors == 0 ? 0.0 : double(into_confined) / errors;

  o.require(f2 >= 0.80, "full dimension 2 >= 0.80");
  o.require(f1 >= 0.90, "full dimension 1 >= 0.90");
  o.require(f2 - a2 >= 0.25, "ablation at least 25 points lower");
  o.require(errors > 0 && concentration > 0.5,
            "ablation errors concentrated in the restricted class");
  o.require(fs_ > as, "full silhouette above ablation");
  o.note("full " + fixed(f1) + "/" + fixed(f2) + ", ablation " + fixed(a1) + "/" +
         fixed(a2) + ", ablation errors into '" +
         manifest.dimensions[1].classes[confined] + "' " +
         fixed(concentration) + ", silhouette " + fixed(fs_) + " vs " + fixed(as));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::vector<int> only;
  std::string work = "acceptance_work";
  bool reuse = false;
  app.add_option("--only", only, "Criteria to run")
      ->delimiter(',')
      ->check(CLI::Range(1, 8));
  app.add_option("--work", work, "Scratch directory for criteria 7 and 8");
  app.add_flag("--reuse", reuse, "Keep outputs already present in --work");
  CLI11_PARSE(app, argc, argv);

  Desk desk{fs::absolute(work), fs::path(MRTTS_SOURCE_DIR) / "configs", reuse};
  if (!reuse) fs::remove_all(desk.work);
  fs::create_directories(desk.work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"loss oracles", loss_oracles},
      {"gradient reversal", gradient_reversal},
      {"sampler coverage", sampler_coverage},
      {"attention window", attention_window},
      {"griffin-lim", griffin_lim},
      {"training smoke", [&] { return training_smoke(desk.work); }},
      {"desk-scale transfer", [&] { return desk_transfer(desk); }},
      {"evaluation classifiers", [&] { return eval_classifiers(desk); }},
  };
  // Criterion 8 produces the classifiers criterion 7 depends on.
  const int order[] = {1, 2, 3, 4, 5, 6, 8, 7};

  std::vector<std::string> lines(9);
  bool all = true;
  for (int id : order) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) {
      continue;
    }
    const auto& [name, run] = criteria[id - 1];
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.note(std::string("error: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    all = all && outcome.pass;
    lines[id] = std::string(outcome.pass ? "PASS" : "FAIL") + " criterion " +
                std::to_string(id) + " (" + name + ", " + fixed(seconds, 1) +
                " s): " + outcome.detail;
    std::cout << lines[id] << std::endl;
  }
  std::cout << "\nsummary\n";
  for (int id = 1; id <= 8; ++id) {
    if (!lines[id].empty()) std::cout << lines[id] << "\n";
  }
  return all ? 0 : 1;
}
