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
#ifndef MRTTS_CORPUS_MANIFEST_H_
#define MRTTS_CORPUS_MANIFEST_H_

#include <string>
#include <vector>

#include "mrtts/dsp/spectrogram.h"
#include "mrtts/errors.h"

namespace mrtts::corpus {

inline constexpr int kManifestVersion = 1;

// A style dimension (speaker identity, emotion, ...) and its class names.
// Dimensions and classes are indexed from 0 in code; the manifest and the
// command line name them.
struct StyleDimension {
  std::string name;
  std::vector<std::string> classes;
};

struct StyleLabel {
  int dimension = 0;
  int class_id = 0;
  std::string class_name;
};

struct UtteranceRecord {
  std::string utt_id;
  std::vector<std::string> tokens;
  std::string audio_path;            // relative to the manifest directory
  std::vector<int> labels;           // class id per dimension
  int duration_frames = 0;
  std::string split = "train";       // "train" or "test"

  friend bool operator==(const UtteranceRecord&,
                         const UtteranceRecord&) = default;
};

struct CorpusManifest {
  std::vector<StyleDimension> dimensions;
  std::vector<std::string> vocabulary;
  dsp::DspConfig dsp;                    // framing used for duration_frames
  std::vector<UtteranceRecord> records;
  // present[c1][c2]: some record has class c1 in dimension 0 and c2 in
  // dimension 1.
  std::vector<std::vector<bool>> disjointness_map;
  std::string root;                  // directory holding the manifest

  StyleLabel label(const UtteranceRecord& r, int dimension) const;
  int class_count(int dimension) const {
    return static_cast<int>(dimensions[dimension].classes.size());
  }
  std::string audio_file(const UtteranceRecord& r) const;

  friend bool operator==(const CorpusManifest& a, const CorpusManifest& b) {
    return a.dimensions.size() == b.dimensions.size() &&
           a.vocabulary == b.vocabulary && a.records == b.records &&
           a.disjointness_map == b.disjointness_map &&
           [&] {
             for (std::size_t i = 0; i < a.dimensions.size(); ++i) {
               if (a.dimensions[i].name != b.dimensions[i].name ||
                   a.dimensions[i].classes != b.dimensions[i].classes) {
                 return false;
               }
             }
             return true;
           }();
  }
};

enum class ManifestErrorKind {
  kSchema,
  kMissingAudio,
  kDuplicateId,
  kUnknownLabel,
  kBadRecord,
  kEmptyClass,
};

class ManifestError : public DataError {
 public:
  ManifestError(ManifestErrorKind kind, std::string utt_id,
                const std::string& what)
      : DataError(what), kind_(kind), utt_id_(std::move(utt_id)) {}
  ManifestErrorKind kind() const { return kind_; }
  const std::string& utt_id() const { return utt_id_; }

 private:
  ManifestErrorKind kind_;
  std::string utt_id_;
};

// Recomputes disjointness_map from the records.
void rebuild_disjointness(CorpusManifest& manifest);

// Checks every invariant (labels in range, unique ids, non-empty tokens, every
// declared class used). With `check_audio`, also that each audio file exists.
void validate(const CorpusManifest& manifest, bool check_audio);

// Line-delimited JSON: a header object, then one object per record.
std::string serialize_manifest(const CorpusManifest& manifest);
CorpusManifest parse_manifest(const std::string& text, const std::string& root,
                              const std::string& source);

void save_manifest(const CorpusManifest& manifest, const std::string& path);
CorpusManifest load_manifest(const std::string& path);

}  // namespace mrtts::corpus

#endif  // MRTTS_CORPUS_MANIFEST_H_
