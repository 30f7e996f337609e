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
#include "mrtts/config.h"

#include <charconv>
#include <sstream>

#include "mrtts/errors.h"
#include "mrtts/io.h"

namespace mrtts {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::string_view text, std::string source) {
  KeyValueFile kv;
  kv.source_ = std::move(source);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw UsageError(kv.source_ + ":" + std::to_string(line_no) +
                       ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(trimmed).substr(0, eq));
    const std::string value = trim(std::string_view(trimmed).substr(eq + 1));
    if (key.empty()) {
      throw UsageError(kv.source_ + ":" + std::to_string(line_no) +
                       ": empty key");
    }
    if (kv.values_.contains(key)) {
      throw UsageError(kv.source_ + ":" + std::to_string(line_no) +
                       ": duplicate key '" + key + "'");
    }
    kv.values_.emplace(key, value);
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const DataError&) {
    throw UsageError("cannot read config file: " + path);
  }
  return parse(text, path);
}

bool KeyValueFile::has(const std::string& key) const {
  return values_.contains(key);
}

std::string KeyValueFile::get_string(const std::string& key,
                                     std::optional<std::string> fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    if (fallback) return *fallback;
    throw UsageError(source_ + ": missing required key '" + key + "'");
  }
  used_.insert(key);
  return it->second;
}

int KeyValueFile::get_int(const std::string& key,
                          std::optional<int> fallback) const {
  if (!has(key) && fallback) return *fallback;
  const std::string s = get_string(key);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError(source_ + ": key '" + key + "' is not an integer: " + s);
  }
  return v;
}

double KeyValueFile::get_double(const std::string& key,
                                std::optional<double> fallback) const {
  if (!has(key) && fallback) return *fallback;
  const std::string s = get_string(key);
  std::istringstream in(s);
  double v = 0.0;
  in >> v;
  if (in.fail() || !in.eof()) {
    throw UsageError(source_ + ": key '" + key + "' is not a number: " + s);
  }
  return v;
}

bool KeyValueFile::get_bool(const std::string& key,
                            std::optional<bool> fallback) const {
  if (!has(key) && fallback) return *fallback;
  const std::string s = get_string(key);
  if (s == "true" || s == "1" || s == "on") return true;
  if (s == "false" || s == "0" || s == "off") return false;
  throw UsageError(source_ + ": key '" + key + "' is not a boolean: " + s);
}

std::vector<std::string> KeyValueFile::get_list(const std::string& key) const {
  std::istringstream in(get_string(key));
  std::vector<std::string> out;
  for (std::string item; in >> item;) out.push_back(item);
  return out;
}

std::vector<std::string> KeyValueFile::keys_with_prefix(
    const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [k, _] : values_) {
    if (k.starts_with(prefix)) out.push_back(k);
  }
  return out;
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

void KeyValueFile::reject_unknown() const {
  std::string unknown;
  for (const auto& [k, _] : values_) {
    if (!used_.contains(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  }
  if (!unknown.empty()) {
    throw UsageError(source_ + ": unknown key(s): " + unknown);
  }
}

std::string KeyValueFile::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace mrtts
