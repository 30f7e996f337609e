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

#ifndef MRTTS_MODEL_CHECKPOINT_H_
#define MRTTS_MODEL_CHECKPOINT_H_

#include <map>
#include <memory>
#include <string>

#include "json.hpp"
#include "mrtts/autodiff.h"
#include "mrtts/dsp/spectrogram.h"
#include "mrtts/matrix.h"
#include "mrtts/model/model.h"

namespace mrtts::model {

inline constexpr int kArchiveVersion = 1;

// Single-file container: a JSON header followed by raw float64 arrays.
//
//   "MRTTSAR1" | u64 header bytes | header JSON | tensor payload
//
// The header holds `kind`, free-form `meta` and the tensor index. Values are
// stored bit-exactly.
struct Archive {
  std::string kind;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  std::map<std::string, Matrix> tensors;
};

void write_archive(const std::string& path, const Archive& archive);
// Throws DataError on a missing, truncated or foreign file.
Archive read_archive(const std::string& path);

nlohmann::ordered_json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::ordered_json& json);

// Adds the model configuration and every parameter ("param/<name>") to
// `archive`.
void store_model(const Model& model, Archive& archive);
// Rebuilds a model from an archive written by store_model.
std::unique_ptr<Model> restore_model(const Archive& archive);

// Copies "<prefix><name>" tensors into matching parameters.
void load_parameters(const Archive& archive, const std::string& prefix,
                     ad::ParameterStore& store);
void save_parameters(const ad::ParameterStore& store,
                     const std::string& prefix, Archive& archive);

nlohmann::ordered_json dsp_to_json(const dsp::DspConfig& config);
dsp::DspConfig dsp_from_json(const nlohmann::ordered_json& json);

// A model archive also records the signal settings the model was trained
// with, so synthesis can invert its frames.
void save_model(const std::string& path, const Model& model,
                const dsp::DspConfig& dsp = {});
// `dsp`, when given, receives the recorded signal settings.
std::unique_ptr<Model> load_model(const std::string& path,
                                  dsp::DspConfig* dsp = nullptr);

}  // namespace mrtts::model

#endif  // MRTTS_MODEL_CHECKPOINT_H_
