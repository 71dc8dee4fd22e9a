#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace regretlab {

// Every random draw in the lab comes from a keyed stream: a stream seed is
// derived from (master_seed, purpose, up to three indices) by splitmix64-style
// mixing, and feeds its own mt19937_64. Two consumers never share a stream, so
// the order in which components draw cannot perturb each other -- this is what
// makes the on-demand and expanded sampling backends produce identical sample
// sequences by construction.

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

enum class StreamPurpose : std::uint64_t {
  env_build = 1,    // instance generators
  init_state = 2,   // s_1^k draws, one per episode
  transition = 3,   // next-state draws, one stream per (h,s,a)
  reward = 4,       // reward draws, one stream per (h,s,a)
  agent_action = 5, // uniform-random agent
  pac_extract = 6,  // PAC policy extraction
  seed_derive = 7,  // replication seeds from a sweep master seed
};

inline std::uint64_t derive_seed(std::uint64_t master, StreamPurpose purpose,
                                 std::uint64_t i = 0, std::uint64_t j = 0,
                                 std::uint64_t l = 0) {
  std::uint64_t x = mix64(master + 0x9e3779b97f4a7c15ull);
  x = mix64(x ^ (static_cast<std::uint64_t>(purpose) + 0xd1b54a32d192ed03ull));
  x = mix64(x ^ (i + 0x8cb92ba72f3d8dd7ull));
  x = mix64(x ^ (j + 0xaef17502108ef2d9ull));
  x = mix64(x ^ (l + 0x2545f4914f6cdd1dull));
  return x;
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // uniform double in [0,1), 53 random bits
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n). Hand-rolled rejection sampling: the std
  // distributions are implementation-defined, and reproducibility across
  // toolchains matters more than the two lines saved.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n == 0");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = eng_();
      if (x >= threshold) return x % n;
    }
  }

  // inverse-cdf walk over a probability row; rounding deficit falls onto the
  // last positive-mass entry so the draw is always a support point
  int categorical(const double* p, int n) {
    const double u = uniform();
    double acc = 0.0;
    int last_pos = -1;
    for (int i = 0; i < n; ++i) {
      if (p[i] > 0.0) last_pos = i;
      acc += p[i];
      if (u < acc) return i;
    }
    if (last_pos < 0) throw std::runtime_error("categorical: all-zero row");
    return last_pos;
  }

  int categorical(const std::vector<double>& p) {
    return categorical(p.data(), static_cast<int>(p.size()));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace regretlab
