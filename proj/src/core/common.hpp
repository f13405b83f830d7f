// core/common.hpp

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

#ifndef UFEMA_CORE_COMMON_HPP_
#define UFEMA_CORE_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ufema {

// Error categories surfaced across the C boundary.
enum class ErrorCode {
  kInvalidArgument = 1,
  kDegenerateInput = 2,
  kIoError = 3,
  kFormatError = 4,
  kTrainingFailure = 5,
  kCorruption = 6,
  kPoolViolation = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

inline void require_arg(bool cond, const std::string& msg) {
  require(cond, ErrorCode::kInvalidArgument, msg);
}

// FNV-1a over raw bytes; used for parameter freeze checks and seed derivation.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a64(s.data(), s.size(), h);
}

template <typename T>
uint64_t hash_values(const std::vector<T>& v, uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a64(v.data(), v.size() * sizeof(T), h);
}

// Combine integers into a derived seed (order-sensitive).
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t h = fnv1a64(&a, sizeof(a));
  return fnv1a64(&b, sizeof(b), h);
}

// Deterministic RNG with explicit, stdlib-independent draw routines so the
// same seed replays bit-identically. State serializes to text for
// checkpoint resume.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : gen_(static_cast<std::mt19937_64::result_type>(seed)) {}

  uint64_t raw() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) {
    // Modulo bias is negligible for n << 2^64 and irrelevant here; what
    // matters is replayability.
    return gen_() % n;
  }

  // Standard normal via Box-Muller (single draw per call, no cached spare,
  // so the state advances predictably).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::string serialize() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
    require(!is.fail(), ErrorCode::kCorruption, "bad RNG state string");
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ufema

#endif  // UFEMA_CORE_COMMON_HPP_
