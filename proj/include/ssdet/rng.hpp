#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace ssdet {

// splitmix64: the one-step mixer everything else is built on.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic generator. All distributions are hand-rolled so that the
// same seed yields bit-identical sequences on every platform/compiler;
// std::uniform_real_distribution makes no such promise.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in (0, 1]; never returns 0 so log() is always safe.
  double uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive on both ends. Modulo bias is far below anything the
  // simulations can resolve and keeps the draw count fixed.
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  bool bernoulli(double p) { return uniform() <= p; }

  // Box-Muller; uses two uniforms per draw, no cached spare, so the
  // consumed stream length is predictable.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

 private:
  std::uint64_t state_;
};

// Stream tags keep independent random uses from aliasing each other.
// Every consumer derives its own generator from (seed, tag, indices...),
// so scene i is reproducible without generating scenes 0..i-1.
namespace streams {
constexpr std::uint64_t kScene = 0x5ce6e1;
constexpr std::uint64_t kProposal = 0x9209a1;
constexpr std::uint64_t kAugment = 0xa06e67;
constexpr std::uint64_t kWorld = 0x309c1d;
constexpr std::uint64_t kCandidates = 0xca6d1d;
constexpr std::uint64_t kBatch = 0xba7c4;
constexpr std::uint64_t kInit = 0x171217;
constexpr std::uint64_t kOracle = 0x02ac1e;
}  // namespace streams

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  return splitmix64(s);
}

inline Rng derived_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = splitmix64(seed);
  for (std::uint64_t t : tags) s = hash_mix(s, t);
  return Rng(s);
}

}  // namespace ssdet
