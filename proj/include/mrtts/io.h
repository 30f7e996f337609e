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

#ifndef MRTTS_IO_H_
#define MRTTS_IO_H_

#include <span>
#include <string>
#include <string_view>

namespace mrtts::io {

// Writes `bytes` to `path` via a sibling temporary file and rename(2), so the
// final path either holds the complete content or is untouched.
void write_file_atomic(const std::string& path, std::span<const char> bytes);
void write_file_atomic(const std::string& path, std::string_view text);

std::string read_file(const std::string& path);

}  // namespace mrtts::io

#endif  // MRTTS_IO_H_
