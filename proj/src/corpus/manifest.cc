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
#include "mrtts/corpus/manifest.h"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mrtts/io.h"

namespace mrtts::corpus {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kSchema = "mrtts-manifest";

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : " ") + s;
  return out;
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

StyleLabel CorpusManifest::label(const UtteranceRecord& r,
                                 int dimension) const {
  const int id = r.labels.at(dimension);
  return {dimension, id, dimensions.at(dimension).classes.at(id)};
}

std::string CorpusManifest::audio_file(const UtteranceRecord& r) const {
  return (std::filesystem::path(root) / r.audio_path).string();
}

void rebuild_disjointness(CorpusManifest& m) {
  m.disjointness_map.clear();
  if (m.dimensions.size() < 2) return;
  m.disjointness_map.assign(
      m.dimensions[0].classes.size(),
      std::vector<bool>(m.dimensions[1].classes.size(), false));
  for (const auto& r : m.records) {
    m.disjointness_map[r.labels[0]][r.labels[1]] = true;
  }
}

void validate(const CorpusManifest& m, bool check_audio) {
  if (m.dimensions.empty()) {
    throw ManifestError(ManifestErrorKind::kSchema, "",
                        "manifest declares no style dimensions");
  }
  const std::set<std::string> vocab(m.vocabulary.begin(), m.vocabulary.end());
  std::set<std::string> ids;
  std::vector<std::vector<int>> counts(m.dimensions.size());
  for (std::size_t d = 0; d < m.dimensions.size(); ++d) {
    counts[d].assign(m.dimensions[d].classes.size(), 0);
  }
  for (const auto& r : m.records) {
    if (!ids.insert(r.utt_id).second) {
      throw ManifestError(ManifestErrorKind::kDuplicateId, r.utt_id,
                          "duplicate utt_id '" + r.utt_id + "'");
    }
    if (r.labels.size() != m.dimensions.size()) {
      throw ManifestError(ManifestErrorKind::kBadRecord, r.utt_id,
                          "record '" + r.utt_id + "' has " +
                              std::to_string(r.labels.size()) +
                              " labels, expected one per dimension");
    }
    for (std::size_t d = 0; d < r.labels.size(); ++d) {
      if (r.labels[d] < 0 ||
          r.labels[d] >= static_cast<int>(m.dimensions[d].classes.size())) {
        throw ManifestError(ManifestErrorKind::kUnknownLabel, r.utt_id,
                            "record '" + r.utt_id + "': label outside " +
                                m.dimensions[d].name + " classes");
      }
      ++counts[d][r.labels[d]];
    }
    if (r.tokens.empty()) {
      throw ManifestError(ManifestErrorKind::kBadRecord, r.utt_id,
                          "record '" + r.utt_id + "' has no tokens");
    }
    for (const auto& t : r.tokens) {
      if (!vocab.contains(t)) {
        throw ManifestError(ManifestErrorKind::kBadRecord, r.utt_id,
                            "record '" + r.utt_id + "': token '" + t +
                                "' not in vocabulary");
      }
    }
    if (r.duration_frames < 1) {
      throw ManifestError(ManifestErrorKind::kBadRecord, r.utt_id,
                          "record '" + r.utt_id + "': duration_frames < 1");
    }
    if (r.split != "train" && r.split != "test") {
      throw ManifestError(ManifestErrorKind::kBadRecord, r.utt_id,
                          "record '" + r.utt_id + "': unknown split '" +
                              r.split + "'");
    }
    if (check_audio && !std::filesystem::exists(m.audio_file(r))) {
      throw ManifestError(ManifestErrorKind::kMissingAudio, r.utt_id,
                          "record '" + r.utt_id + "': missing audio file " +
                              m.audio_file(r));
    }
  }
  for (std::size_t d = 0; d < m.dimensions.size(); ++d) {
    for (std::size_t c = 0; c < counts[d].size(); ++c) {
      if (counts[d][c] == 0) {
        throw ManifestError(ManifestErrorKind::kEmptyClass, "",
                            m.dimensions[d].name + " class '" +
                                m.dimensions[d].classes[c] +
                                "' has no records");
      }
    }
  }
}

std::string serialize_manifest(const CorpusManifest& m) {
  json header;
  header["schema"] = kSchema;
  header["version"] = kManifestVersion;
  json dims = json::array();
  for (const auto& d : m.dimensions) {
    dims.push_back({{"name", d.name}, {"classes", d.classes}});
  }
  header["dimensions"] = dims;
  header["vocabulary"] = m.vocabulary;
  header["dsp"] = {{"sample_rate", m.dsp.sample_rate},
                   {"fft_size", m.dsp.fft_size},
                   {"hop_length", m.dsp.hop_length},
                   {"window_length", m.dsp.window_length}};
  std::string out = header.dump() + "\n";
  for (const auto& r : m.records) {
    json rec;
    rec["utt_id"] = r.utt_id;
    rec["audio"] = r.audio_path;
    rec["tokens"] = join(r.tokens);
    for (std::size_t d = 0; d < m.dimensions.size(); ++d) {
      rec[m.dimensions[d].name] = m.dimensions[d].classes[r.labels[d]];
    }
    rec["duration_frames"] = r.duration_frames;
    rec["split"] = r.split;
    out += rec.dump() + "\n";
  }
  return out;
}

CorpusManifest parse_manifest(const std::string& text, const std::string& root,
                              const std::string& source) {
  CorpusManifest m;
  m.root = root;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto schema_error = [&](const std::string& why) {
    return ManifestError(ManifestErrorKind::kSchema, "",
                         source + ":" + std::to_string(line_no) + ": " + why);
  };
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw schema_error(std::string("invalid JSON: ") + e.what());
    }
    if (!have_header) {
      if (obj.value("schema", "") != kSchema ||
          obj.value("version", 0) != kManifestVersion) {
        throw schema_error("expected header with schema '" +
                           std::string(kSchema) + "' version " +
                           std::to_string(kManifestVersion));
      }
      try {
        for (const auto& d : obj.at("dimensions")) {
          m.dimensions.push_back(
              {d.at("name").get<std::string>(),
               d.at("classes").get<std::vector<std::string>>()});
        }
        m.vocabulary = obj.at("vocabulary").get<std::vector<std::string>>();
        const auto& dsp = obj.at("dsp");
        m.dsp.sample_rate = dsp.at("sample_rate").get<int>();
        m.dsp.fft_size = dsp.at("fft_size").get<int>();
        m.dsp.hop_length = dsp.at("hop_length").get<int>();
        m.dsp.window_length = dsp.at("window_length").get<int>();
      } catch (const json::exception& e) {
        throw schema_error(std::string("bad header: ") + e.what());
      }
      have_header = true;
      continue;
    }
    UtteranceRecord r;
    try {
      r.utt_id = obj.at("utt_id").get<std::string>();
    } catch (const json::exception&) {
      throw schema_error("record without utt_id");
    }
    try {
      r.audio_path = obj.at("audio").get<std::string>();
      r.tokens = split_words(obj.at("tokens").get<std::string>());
      r.duration_frames = obj.at("duration_frames").get<int>();
      r.split = obj.value("split", "train");
    } catch (const json::exception& e) {
      throw ManifestError(ManifestErrorKind::kBadRecord, r.utt_id,
                          "record '" + r.utt_id + "': " + e.what());
    }
    for (const auto& d : m.dimensions) {
      if (!obj.contains(d.name)) {
        throw ManifestError(ManifestErrorKind::kBadRecord, r.utt_id,
                            "record '" + r.utt_id + "' lacks a '" + d.name +
                                "' label");
      }
      const std::string value = obj.at(d.name).get<std::string>();
      const auto it = std::find(d.classes.begin(), d.classes.end(), value);
      if (it == d.classes.end()) {
        throw ManifestError(ManifestErrorKind::kUnknownLabel, r.utt_id,
                            "record '" + r.utt_id + "': " + d.name +
                                " label '" + value +
                                "' is not a declared class");
      }
      r.labels.push_back(static_cast<int>(it - d.classes.begin()));
    }
    m.records.push_back(std::move(r));
  }
  if (!have_header) throw schema_error("empty manifest");
  rebuild_disjointness(m);
  return m;
}

void save_manifest(const CorpusManifest& m, const std::string& path) {
  io::write_file_atomic(path, std::string_view(serialize_manifest(m)));
}

CorpusManifest load_manifest(const std::string& path) {
  namespace fs = std::filesystem;
  fs::path file(path);
  if (fs::is_directory(file)) file /= "manifest.jsonl";
  if (!fs::exists(file)) {
    throw ManifestError(ManifestErrorKind::kSchema, "",
                        "manifest not found: " + file.string());
  }
  CorpusManifest m = parse_manifest(io::read_file(file.string()),
                                    file.parent_path().string(),
                                    file.string());
  validate(m, /*check_audio=*/true);
  return m;
}

}  // namespace mrtts::corpus
