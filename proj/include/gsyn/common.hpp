#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace gsyn {

using Time = int64_t;
using NodeId = int;

// Raised for malformed scenarios, contract violations and forged envelopes.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

// Deterministic RNG wrapper. mt19937_64 output is fixed by the standard;
// the bounded draw below avoids std::uniform_int_distribution, whose results
// vary between standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }

  // Uniform draw in [lo, hi]. Modulo bias is irrelevant at these ranges.
  int64_t range(int64_t lo, int64_t hi) {
    if (hi < lo) throw std::invalid_argument("Rng::range: hi < lo");
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(eng_() % span);
  }

  bool chance(uint32_t num, uint32_t den) {
    return eng_() % den < num;
  }

 private:
  std::mt19937_64 eng_;
};

inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace gsyn
