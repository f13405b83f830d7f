// core/checkpoint.cpp

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

#include "core/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <sstream>

namespace ufema {

namespace {

// Floats cross the boundary as explicit little-endian bytes.
static_assert(sizeof(float) == 4);

void append_f32_le(std::string* out, const std::vector<float>& v) {
  for (float x : v) {
    uint32_t bits;
    std::memcpy(&bits, &x, 4);
    for (int i = 0; i < 4; ++i)
      out->push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

std::vector<float> read_f32_le(const unsigned char* p, size_t numel) {
  std::vector<float> v(numel);
  for (size_t i = 0; i < numel; ++i) {
    uint32_t bits = p[4 * i] | (p[4 * i + 1] << 8) | (p[4 * i + 2] << 16) |
                    (uint32_t(p[4 * i + 3]) << 24);
    std::memcpy(&v[i], &bits, 4);
  }
  return v;
}

}  // namespace

void CheckpointFile::set_meta(const std::string& key, const std::string& value) {
  require_arg(key.find_first_of(" \n") == std::string::npos, "bad meta key");
  require_arg(value.find('\n') == std::string::npos, "meta value contains newline");
  for (auto& [k, v] : metas_)
    if (k == key) {
      v = value;
      return;
    }
  metas_.push_back({key, value});
}

bool CheckpointFile::has_meta(const std::string& key) const {
  for (const auto& [k, v] : metas_)
    if (k == key) return true;
  return false;
}

const std::string& CheckpointFile::meta(const std::string& key) const {
  for (const auto& [k, v] : metas_)
    if (k == key) return v;
  throw Error(ErrorCode::kFormatError, "checkpoint missing meta key: " + key);
}

double CheckpointFile::meta_double(const std::string& key) const {
  return std::stod(meta(key));
}

int64_t CheckpointFile::meta_int(const std::string& key) const {
  return std::stoll(meta(key));
}

void CheckpointFile::add_tensor(const std::string& name, std::vector<float> data) {
  require_arg(name.find_first_of(" \n") == std::string::npos, "bad tensor name");
  for (auto& [n, d] : tensors_)
    if (n == name) {
      d = std::move(data);
      return;
    }
  tensors_.push_back({name, std::move(data)});
}

bool CheckpointFile::has_tensor(const std::string& name) const {
  for (const auto& [n, d] : tensors_)
    if (n == name) return true;
  return false;
}

const std::vector<float>& CheckpointFile::tensor(const std::string& name) const {
  for (const auto& [n, d] : tensors_)
    if (n == name) return d;
  throw Error(ErrorCode::kFormatError, "checkpoint missing tensor: " + name);
}

void CheckpointFile::save(const std::string& path) const {
  std::string out;
  out += kMagic;
  out += '\n';
  for (const auto& [k, v] : metas_) out += "meta " + k + " " + v + "\n";
  size_t payload = 0;
  for (const auto& [n, d] : tensors_) {
    out += "tensor " + n + " f32 " + std::to_string(d.size()) + "\n";
    payload += 4 * d.size();
  }
  out += "payload " + std::to_string(payload) + "\n";
  for (const auto& [n, d] : tensors_) append_f32_le(&out, d);

  uint32_t crc = crc32(0L, reinterpret_cast<const Bytef*>(out.data()),
                       static_cast<uInt>(out.size()));
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((crc >> (8 * i)) & 0xff));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), ErrorCode::kIoError, "cannot write checkpoint: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  require(f.good(), ErrorCode::kIoError, "checkpoint write failed: " + path);
}

CheckpointFile CheckpointFile::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::kIoError, "cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  require(buf.size() > 4, ErrorCode::kFormatError, "checkpoint too short: " + path);

  const size_t body_len = buf.size() - 4;
  uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= uint32_t(static_cast<unsigned char>(buf[body_len + i])) << (8 * i);
  uint32_t crc = crc32(0L, reinterpret_cast<const Bytef*>(buf.data()),
                       static_cast<uInt>(body_len));
  require(crc == stored, ErrorCode::kCorruption,
          "checkpoint checksum mismatch (truncated or corrupt): " + path);

  CheckpointFile ck;
  size_t pos = 0;
  auto next_line = [&]() {
    const size_t nl = buf.find('\n', pos);
    require(nl != std::string::npos, ErrorCode::kFormatError,
            "unterminated checkpoint header: " + path);
    std::string line = buf.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  require(next_line() == kMagic, ErrorCode::kFormatError,
          "checkpoint format_version mismatch in " + path);

  std::vector<std::pair<std::string, size_t>> dir;
  for (;;) {
    std::string line = next_line();
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag == "meta") {
      std::string key;
      is >> key;
      std::string value;
      std::getline(is, value);
      if (!value.empty() && value[0] == ' ') value.erase(0, 1);
      ck.metas_.push_back({key, value});
    } else if (tag == "tensor") {
      std::string name, dtype;
      size_t numel;
      is >> name >> dtype >> numel;
      require(dtype == "f32" && !is.fail(), ErrorCode::kFormatError,
              "bad tensor directory line: " + line);
      dir.push_back({name, numel});
    } else if (tag == "payload") {
      size_t bytes;
      is >> bytes;
      require(!is.fail() && pos + bytes == body_len, ErrorCode::kFormatError,
              "payload size mismatch in " + path);
      break;
    } else {
      throw Error(ErrorCode::kFormatError, "unknown header tag: " + tag);
    }
  }
  for (const auto& [name, numel] : dir) {
    ck.tensors_.push_back(
        {name, read_f32_le(reinterpret_cast<const unsigned char*>(buf.data()) + pos,
                           numel)});
    pos += 4 * numel;
  }
  return ck;
}

}  // namespace ufema
