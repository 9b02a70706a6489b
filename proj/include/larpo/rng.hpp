#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace larpo {

// splitmix64 step, used both for seed mixing and for stateless per-key draws.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic seed derivation: fold stream ids into a parent seed so
// independent components (world gen, per-prompt sampling, study arms) get
// decorrelated, reproducible streams.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t state = seed;
  std::uint64_t acc = splitmix64(state);
  for (std::uint64_t id : ids) {
    state = acc ^ (id + 0x9e3779b97f4a7c15ULL);
    acc = splitmix64(state);
  }
  return acc;
}

// mt19937_64 with hand-rolled conversions. std::uniform_real_distribution and
// std::normal_distribution are implementation-defined; the draws below are
// pinned so seeded results are stable across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : base_seed_(seed), engine_(mix_seed(seed, {})) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be >= 1.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller (cosine branch, no cached state).
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Child rng on an independent stream.
  Rng derive(std::initializer_list<std::uint64_t> ids) const {
    return Rng(mix_seed(base_seed_, ids));
  }

 private:
  std::uint64_t base_seed_;
  std::mt19937_64 engine_;
};

// Stateless unit normal keyed by (seed, a, b); used by the noisy reward
// oracle so repeated queries return identical values without a cache.
inline double keyed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t state = mix_seed(seed, {a, b});
  std::uint64_t r1 = splitmix64(state);
  std::uint64_t r2 = splitmix64(state);
  double u1 = static_cast<double>(r1 >> 11) * 0x1.0p-53;
  double u2 = static_cast<double>(r2 >> 11) * 0x1.0p-53;
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace larpo
