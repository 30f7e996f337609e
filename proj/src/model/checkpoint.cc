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

#include "mrtts/model/checkpoint.h"

#include <cstdint>
#include <cstring>

#include "mrtts/errors.h"
#include "mrtts/io.h"

namespace mrtts::model {

using json = nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'M', 'R', 'T', 'T', 'S', 'A', 'R', '1'};

}  // namespace

void write_archive(const std::string& path, const Archive& archive) {
  json header;
  header["schema"] = "mrtts-archive";
  header["version"] = kArchiveVersion;
  header["kind"] = archive.kind;
  header["meta"] = archive.meta;
  json index = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : archive.tensors) {
    index.push_back({{"name", name},
                     {"rows", m.rows()},
                     {"cols", m.cols()},
                     {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * sizeof(double);
  }
  header["tensors"] = index;
  const std::string text = header.dump();
  const std::uint64_t header_size = text.size();

  std::vector<char> bytes;
  bytes.reserve(sizeof(kMagic) + sizeof(header_size) + text.size() + offset);
  bytes.insert(bytes.end(), kMagic, kMagic + sizeof(kMagic));
  const char* hs = reinterpret_cast<const char*>(&header_size);
  bytes.insert(bytes.end(), hs, hs + sizeof(header_size));
  bytes.insert(bytes.end(), text.begin(), text.end());
  for (const auto& [name, m] : archive.tensors) {
    const char* p = reinterpret_cast<const char*>(m.data());
    bytes.insert(bytes.end(), p, p + m.size() * sizeof(double));
  }
  io::write_file_atomic(path, std::span<const char>(bytes));
}

Archive read_archive(const std::string& path) {
  const std::string bytes = io::read_file(path);
  std::uint64_t header_size = 0;
  if (bytes.size() < sizeof(kMagic) + sizeof(header_size) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path + ": not an mrtts archive");
  }
  std::memcpy(&header_size, bytes.data() + sizeof(kMagic), sizeof(header_size));
  const std::size_t body = sizeof(kMagic) + sizeof(header_size);
  if (header_size > bytes.size() - body) {
    throw DataError(path + ": truncated archive header");
  }
  json header;
  try {
    header = json::parse(bytes.substr(body, header_size));
  } catch (const json::exception& e) {
    throw DataError(path + ": corrupt archive header: " + e.what());
  }
  if (header.value("schema", "") != "mrtts-archive" ||
      header.value("version", 0) != kArchiveVersion) {
    throw DataError(path + ": unsupported archive schema or version");
  }
  Archive a;
  a.kind = header.value("kind", "");
  a.meta = header.value("meta", json::object());
  const std::size_t payload = body + header_size;
  for (const auto& t : header.at("tensors")) {
    const int rows = t.at("rows").get<int>();
    const int cols = t.at("cols").get<int>();
    const std::uint64_t offset = t.at("offset").get<std::uint64_t>();
    const std::uint64_t n =
        static_cast<std::uint64_t>(rows) * cols * sizeof(double);
    if (rows < 0 || cols < 0 || payload + offset + n > bytes.size()) {
      throw DataError(path + ": truncated tensor '" +
                      t.at("name").get<std::string>() + "'");
    }
    Matrix m(rows, cols);
    std::memcpy(m.data(), bytes.data() + payload + offset, n);
    a.tensors.emplace(t.at("name").get<std::string>(), std::move(m));
  }
  return a;
}

json config_to_json(const ModelConfig& c) {
  KeyValueFile kv;
  c.write(kv);
  json j;
  j["vocabulary"] = c.vocabulary;
  json dims = json::array();
  for (const auto& d : c.dimensions) {
    dims.push_back({{"name", d.name}, {"classes", d.classes}});
  }
  j["dimensions"] = dims;
  json values = json::object();
  for (const auto& k : kv.keys_with_prefix("model.")) {
    values[k] = kv.get_string(k);
  }
  j["values"] = values;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  try {
    c.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    for (const auto& d : j.at("dimensions")) {
      c.dimensions.push_back(
          {d.at("name").get<std::string>(),
           d.at("classes").get<std::vector<std::string>>()});
    }
    KeyValueFile kv;
    for (const auto& [k, v] : j.at("values").items()) {
      kv.set(k, v.get<std::string>());
    }
    c.read(kv);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad model configuration: ") + e.what());
  }
  return c;
}

void save_parameters(const ad::ParameterStore& store, const std::string& prefix,
                     Archive& archive) {
  for (const ad::Parameter* p : store.all()) {
    archive.tensors[prefix + p->name] = p->value;
  }
}

void load_parameters(const Archive& archive, const std::string& prefix,
                     ad::ParameterStore& store) {
  for (ad::Parameter* p : store.all()) {
    const auto it = archive.tensors.find(prefix + p->name);
    if (it == archive.tensors.end()) {
      throw DataError("archive lacks tensor '" + prefix + p->name + "'");
    }
    if (it->second.rows() != p->value.rows() ||
        it->second.cols() != p->value.cols()) {
      throw DataError("archive tensor '" + prefix + p->name +
                      "' has the wrong shape");
    }
    p->value = it->second;
  }
}

void store_model(const Model& model, Archive& archive) {
  archive.meta["model"] = config_to_json(model.config());
  save_parameters(model.params(), "param/", archive);
}

std::unique_ptr<Model> restore_model(const Archive& archive) {
  if (!archive.meta.contains("model")) {
    throw DataError("archive holds no model");
  }
  ModelConfig config;
  try {
    config = config_from_json(archive.meta.at("model"));
    config.validate();
  } catch (const UsageError& e) {
    throw DataError(std::string("bad model configuration: ") + e.what());
  }
  auto model = std::make_unique<Model>(std::move(config), 0);
  load_parameters(archive, "param/", model->params());
  return model;
}

nlohmann::ordered_json dsp_to_json(const dsp::DspConfig& c) {
  nlohmann::ordered_json j;
  j["sample_rate"] = c.sample_rate;
  j["fft_size"] = c.fft_size;
  j["hop_length"] = c.hop_length;
  j["window_length"] = c.window_length;
  j["mel_bins"] = c.mel_bins;
  j["griffin_lim_iters"] = c.griffin_lim_iters;
  j["mel_fmin"] = c.mel_fmin;
  j["mel_fmax"] = c.mel_fmax;
  return j;
}

dsp::DspConfig dsp_from_json(const nlohmann::ordered_json& j) {
  dsp::DspConfig c;
  try {
    c.sample_rate = j.value("sample_rate", c.sample_rate);
    c.fft_size = j.value("fft_size", c.fft_size);
    c.hop_length = j.value("hop_length", c.hop_length);
    c.window_length = j.value("window_length", c.window_length);
    c.mel_bins = j.value("mel_bins", c.mel_bins);
    c.griffin_lim_iters = j.value("griffin_lim_iters", c.griffin_lim_iters);
    c.mel_fmin = j.value("mel_fmin", c.mel_fmin);
    c.mel_fmax = j.value("mel_fmax", c.mel_fmax);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad dsp settings in archive: ") + e.what());
  }
  return c;
}

void save_model(const std::string& path, const Model& model,
                const dsp::DspConfig& dsp) {
  Archive a;
  a.kind = "model";
  store_model(model, a);
  a.meta["dsp"] = dsp_to_json(dsp);
  write_archive(path, a);
}

std::unique_ptr<Model> load_model(const std::string& path,
                                  dsp::DspConfig* dsp) {
  const Archive a = read_archive(path);
  if (a.kind != "model" && a.kind != "train-state") {
    throw DataError(path + ": archive of kind '" + a.kind +
                    "' holds no synthesis model");
  }
  auto model = restore_model(a);
  if (dsp != nullptr) {
    *dsp = a.meta.contains("dsp") ? dsp_from_json(a.meta.at("dsp"))
                                  : dsp::DspConfig{};
    dsp->mel_bins = model->config().mel_bins;
  }
  return model;
}

}  // namespace mrtts::model
