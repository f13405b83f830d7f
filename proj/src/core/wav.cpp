// core/wav.cpp

// Copyright 2026  The ufema authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/waveform.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace ufema {

namespace {

void put_u32(std::string* s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string* s, uint16_t v) {
  for (int i = 0; i < 2; ++i) s->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (uint32_t(p[3]) << 24);
}
uint16_t get_u16(const unsigned char* p) { return uint16_t(p[0] | (p[1] << 8)); }

}  // namespace

Waveform load_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::kIoError, "cannot open wav file: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  require(buf.size() >= 44 && std::memcmp(p, "RIFF", 4) == 0 &&
              std::memcmp(p + 8, "WAVE", 4) == 0,
          ErrorCode::kFormatError, "not a RIFF/WAVE file: " + path);

  size_t pos = 12;
  int channels = 0, bits = 0, rate = 0;
  uint16_t audio_format = 0;
  const unsigned char* data = nullptr;
  size_t data_len = 0;
  while (pos + 8 <= buf.size()) {
    uint32_t len = get_u32(p + pos + 4);
    const unsigned char* body = p + pos + 8;
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      require(len >= 16, ErrorCode::kFormatError, "short fmt chunk");
      audio_format = get_u16(body);
      channels = get_u16(body + 2);
      rate = static_cast<int>(get_u32(body + 4));
      bits = get_u16(body + 14);
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      data = body;
      data_len = std::min<size_t>(len, buf.size() - (pos + 8));
    }
    pos += 8 + len + (len & 1);
  }
  require(data != nullptr && channels > 0, ErrorCode::kFormatError,
          "missing fmt/data chunk: " + path);
  require(audio_format == 1, ErrorCode::kFormatError,
          "unsupported wav encoding (want PCM): " + path);
  require(channels == 1, ErrorCode::kFormatError,
          "expected mono wav, got " + std::to_string(channels) + " channels: " + path);
  require(bits == 16, ErrorCode::kFormatError,
          "expected 16-bit PCM, got " + std::to_string(bits) + " bits: " + path);

  Waveform w;
  w.sample_rate = rate;
  const size_t n = data_len / 2;
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    int16_t v = static_cast<int16_t>(get_u16(data + 2 * i));
    w.samples[i] = static_cast<float>(v) / 32768.f;
  }
  require(!w.samples.empty(), ErrorCode::kFormatError, "empty wav data: " + path);
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  w.validate();
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  std::string out;
  out.reserve(44 + 2 * n);
  out += "RIFF";
  put_u32(&out, 36 + 2 * n);
  out += "WAVEfmt ";
  put_u32(&out, 16);
  put_u16(&out, 1);  // PCM
  put_u16(&out, 1);  // mono
  put_u32(&out, static_cast<uint32_t>(w.sample_rate));
  put_u32(&out, static_cast<uint32_t>(w.sample_rate) * 2);
  put_u16(&out, 2);
  put_u16(&out, 16);
  out += "data";
  put_u32(&out, 2 * n);
  for (uint32_t i = 0; i < n; ++i) {
    float x = std::clamp(w.samples[i], -1.f, 1.f);
    int v = std::clamp(static_cast<int>(std::lrintf(x * 32768.f)), -32768, 32767);
    put_u16(&out, static_cast<uint16_t>(static_cast<int16_t>(v)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), ErrorCode::kIoError, "cannot write wav file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  require(f.good(), ErrorCode::kIoError, "wav write failed: " + path);
}

}  // namespace ufema
