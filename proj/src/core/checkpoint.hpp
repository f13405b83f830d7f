// core/checkpoint.hpp

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

#ifndef UFEMA_CORE_CHECKPOINT_HPP_
#define UFEMA_CORE_CHECKPOINT_HPP_

#include <string>
#include <utility>
#include <vector>

#include "core/common.hpp"

namespace ufema {

// Self-describing container: a text header (format line, ordered metas,
// tensor directory) followed by a little-endian float32 payload and a
// trailing CRC32 so truncated files are detected. Loading then saving is
// byte-identical.
class CheckpointFile {
 public:
  static constexpr const char* kMagic = "UFEMA-CKPT v1";

  void set_meta(const std::string& key, const std::string& value);
  bool has_meta(const std::string& key) const;
  const std::string& meta(const std::string& key) const;
  double meta_double(const std::string& key) const;
  int64_t meta_int(const std::string& key) const;

  void add_tensor(const std::string& name, std::vector<float> data);
  bool has_tensor(const std::string& name) const;
  const std::vector<float>& tensor(const std::string& name) const;

  const std::vector<std::pair<std::string, std::string>>& metas() const {
    return metas_;
  }

  void save(const std::string& path) const;
  static CheckpointFile load(const std::string& path);

 private:
  std::vector<std::pair<std::string, std::string>> metas_;
  std::vector<std::pair<std::string, std::vector<float>>> tensors_;
};

}  // namespace ufema

#endif  // UFEMA_CORE_CHECKPOINT_HPP_
