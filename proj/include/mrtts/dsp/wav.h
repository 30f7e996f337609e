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

#ifndef MRTTS_DSP_WAV_H_
#define MRTTS_DSP_WAV_H_

#include <string>
#include <vector>

namespace mrtts::dsp {

// Mono audio with samples nominally in [-1, 1].
struct Waveform {
  int sample_rate = 16000;
  std::vector<double> samples;
};

// 16-bit PCM mono RIFF/WAVE. Throws DataError on anything else.
Waveform read_wav(const std::string& path);

// Writes 16-bit PCM mono, clipping to [-1, 1]. Writes to a temporary file
// and renames it into place.
void write_wav(const std::string& path, const Waveform& wave);

std::vector<char> encode_wav(const Waveform& wave);

}  // namespace mrtts::dsp

#endif  // MRTTS_DSP_WAV_H_
