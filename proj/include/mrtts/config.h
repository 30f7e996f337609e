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
#ifndef MRTTS_CONFIG_H_
#define MRTTS_CONFIG_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mrtts {

// Plain "key = value" text, one entry per line, '#' starts a comment. Readers
// pull typed values by key; every key they touch is remembered so that
// reject_unknown() can flag typos and stale keys after a component has read
// everything it understands.
class KeyValueFile {
 public:
  KeyValueFile() = default;
  static KeyValueFile parse(std::string_view text, std::string source);
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key,
                         std::optional<std::string> fallback = {}) const;
  int get_int(const std::string& key, std::optional<int> fallback = {}) const;
  double get_double(const std::string& key,
                    std::optional<double> fallback = {}) const;
  bool get_bool(const std::string& key,
                std::optional<bool> fallback = {}) const;
  std::vector<std::string> get_list(const std::string& key) const;

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  void set(const std::string& key, const std::string& value);

  // Throws UsageError naming every key that no getter has read.
  void reject_unknown() const;

  std::string dump() const;
  const std::string& source() const { return source_; }

 private:
  std::string source_ = "<memory>";
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace mrtts

#endif  // MRTTS_CONFIG_H_
