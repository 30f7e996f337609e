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

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "mrtts/kernels/kernels.h"

namespace mrtts::kernels {

#ifdef MRTTS_HAVE_AVX2
const KernelTable& avx2_table_unchecked();
#endif

bool cpu_supports_avx2_fma() {
#if defined(MRTTS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported;
#else
  return false;
#endif
}

const KernelTable* avx2_table() {
#ifdef MRTTS_HAVE_AVX2
  if (cpu_supports_avx2_fma()) return &avx2_table_unchecked();
#endif
  return nullptr;
}

namespace {

const KernelTable* select_default() {
  const char* env = std::getenv("MRTTS_KERNELS");
  if (env != nullptr && std::string_view(env) == "scalar") {
    return &scalar_table();
  }
  if (const KernelTable* avx2 = avx2_table()) return avx2;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{select_default()};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

void set_active(const KernelTable& table) {
  slot().store(&table, std::memory_order_relaxed);
}

}  // namespace mrtts::kernels
