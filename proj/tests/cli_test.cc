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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mrtts/cli.h"
#include "mrtts/io.h"
#include "test_util.h"

using namespace mrtts;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

void write(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

constexpr const char* kSmallSpec = R"(dimensions = speaker emotion
speaker.classes = spk1 spk2
emotion.classes = neutral sad angry happy
cell.spk1.neutral = 6
cell.spk2.neutral = 6
cell.spk2.sad = 6
cell.spk2.angry = 6
cell.spk2.happy = 6
min_tokens = 3
max_tokens = 5
token_seconds = 0.1
test_fraction = 0.34
)";

constexpr const char* kTinyTrain = R"(train.steps = 3
train.n_pairs = 2
train.finetune = false
train.checkpoint_interval = 2
dsp.mel_bins = 6
model.mel_bins = 6
model.embed_dim = 6
model.encoder_dim = 8
model.encoder_conv_layers = 1
model.ref_conv_layers = 2
model.ref_channels = 4
model.ref_rnn_dim = 4
model.style_dim = 4
model.classifier_hidden = 6
model.prenet_dim = 6
model.attention_rnn_dim = 8
model.decoder_rnn_dim = 8
model.attention_dim = 4
model.location_filters = 2
model.reduction = 2
)";

constexpr const char* kTinyEval = R"(eval.conv_layers = 2
eval.channels = 4
eval.rnn_dim = 4
eval.embedding_dim = 4
eval.hidden = 4
eval.steps = 3
eval.batch_size = 4
dsp.mel_bins = 6
)";

}  // namespace

TEST_CASE("gen-corpus renders the disjoint example corpus") {
  testing::TempDir dir;
  const auto r = cli({"gen-corpus", "--spec",
                      std::string(MRTTS_SOURCE_DIR) + "/configs/table1.conf",
                      "--out", dir / "corpus", "--seed", "3"});
  CHECK(r.code == 0);
  CHECK(fs::is_regular_file(dir / "corpus/manifest.jsonl"));
  CHECK(r.out.find("wrote 2000 utterances") != std::string::npos);
  CHECK(r.out.find("cell.spk2.happy = 400") != std::string::npos);
}

TEST_CASE("synth with a missing checkpoint leaves no output") {
  testing::TempDir dir;
  write(dir / "r.wav", "");
  const auto r = cli({"synth", "--ckpt", dir / "nope.ckpt", "--text", "a b",
                      "--ref1", dir / "r.wav", "--ref2", dir / "r.wav",
                      "--out", dir / "out.wav"});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("nope.ckpt") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out.wav"));
}

TEST_CASE("usage errors exit with 1") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  const auto r = cli({"gen-corpus", "--spec", "x", "--out", "y", "--bogus"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("--bogus") != std::string::npos);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("unknown config keys are rejected") {
  testing::TempDir dir;
  write(dir / "spec.conf", std::string(kSmallSpec) + "colour = blue\n");
  const auto r = cli({"gen-corpus", "--spec", dir / "spec.conf", "--out",
                      dir / "c"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("colour") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "c"));
}

TEST_CASE("pipeline runs end to end and repeats byte for byte") {
  testing::TempDir dir;
  write(dir / "spec.conf", kSmallSpec);
  write(dir / "train.conf", kTinyTrain);
  write(dir / "eval.conf", kTinyEval);
  const std::string corpus = dir / "corpus";
  REQUIRE(cli({"gen-corpus", "--spec", dir / "spec.conf", "--out", corpus,
               "--seed", "5"}).code == 0);
  REQUIRE(cli({"gen-corpus", "--spec", dir / "spec.conf", "--out",
               dir / "corpus2", "--seed", "5"}).code == 0);
  CHECK(io::read_file(corpus + "/manifest.jsonl") ==
        io::read_file(dir / "corpus2/manifest.jsonl"));

  for (const char* run : {"run", "run2"}) {
    const auto r = cli({"train", "--config", dir / "train.conf", "--corpus",
                        corpus, "--out", dir / run});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.find("train.steps = 3") != std::string::npos);
  }
  CHECK(fs::is_regular_file(dir / "run/effective.conf"));
  CHECK(fs::is_regular_file(dir / "run/metrics.jsonl"));
  CHECK(io::read_file(dir / "run/model.ckpt") ==
        io::read_file(dir / "run2/model.ckpt"));

  const auto train_twice = cli({"train", "--config", dir / "train.conf",
                                "--corpus", corpus, "--out", dir / "run",
                                "--resume"});
  CHECK(train_twice.code == 0);
  CHECK(io::read_file(dir / "run/model.ckpt") ==
        io::read_file(dir / "run2/model.ckpt"));

  const std::string ref = corpus + "/wav/" +
                          fs::directory_iterator(corpus + "/wav")->path()
                              .filename()
                              .string();
  auto s = cli({"synth", "--ckpt", dir / "run/model.ckpt", "--text", "abc",
                "--ref1", ref, "--ref2", ref, "--out", dir / "s.wav",
                "--dump-attention", dir / "att.txt"});
  CHECK_MESSAGE(s.code == 0, s.err);
  CHECK(fs::file_size(dir / "s.wav") > 44);
  CHECK(fs::is_regular_file(dir / "att.txt"));
  s = cli({"synth", "--ckpt", dir / "run/model.ckpt", "--text", "zz", "--ref1",
           ref, "--ref2", ref, "--out", dir / "bad.wav"});
  CHECK(s.code == kExitData);
  CHECK_FALSE(fs::exists(dir / "bad.wav"));

  for (const char* dim : {"1", "2"}) {
    const auto r = cli({"eval-classifier", "--corpus", corpus, "--dim", dim,
                        "--out", dir / ("cls" + std::string(dim) + ".ckpt"),
                        "--config", dir / "eval.conf", "--report",
                        dir / ("cls" + std::string(dim) + ".json")});
    CHECK_MESSAGE(r.code == 0, r.err);
  }
  CHECK(cli({"eval-classifier", "--corpus", corpus, "--dim", "3", "--out",
             dir / "cls3.ckpt", "--config", dir / "eval.conf"}).code ==
        kExitUsage);

  const auto t = cli({"eval-transfer", "--ckpt", dir / "run/model.ckpt",
                      "--cls1", dir / "cls1.ckpt", "--cls2", dir / "cls2.ckpt",
                      "--corpus", corpus, "--seed", "9", "--report",
                      dir / "transfer.json", "--max-texts", "1",
                      "--confusion-png", dir / "confusion.png"});
  CHECK_MESSAGE(t.code == 0, t.err);
  CHECK(io::read_file(dir / "transfer.json").find("\"accuracy\"") !=
        std::string::npos);
  CHECK(fs::is_regular_file(dir / "confusion.png"));
  CHECK(cli({"eval-transfer", "--ckpt", dir / "run/model.ckpt", "--cls1",
             dir / "cls2.ckpt", "--cls2", dir / "cls1.ckpt", "--corpus", corpus,
             "--report", dir / "t2.json"}).code == kExitUsage);

  const auto e = cli({"export-embeddings", "--cls", dir / "cls2.ckpt",
                      "--corpus", corpus, "--n", "2", "--out", dir / "emb.tsv",
                      "--plot", dir / "emb.png"});
  CHECK_MESSAGE(e.code == 0, e.err);
  CHECK(io::read_file(dir / "emb.tsv").starts_with("id\tlabel\te0"));
  CHECK(fs::is_regular_file(dir / "emb.png"));
}
