#pragma once

// Deterministic per-repetition random substreams.
//
// A master seed plus a repetition index is hashed into an independent stream
// seed, so Monte Carlo aggregation is order-independent and reproducible.

#include <cstdint>
#include <limits>

namespace qrcell {

// splitmix64 step; also usable as a cheap stand-alone bit generator.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Satisfies UniformRandomBitGenerator; state advances via splitmix64.
class SubstreamRng {
 public:
  using result_type = std::uint64_t;
  explicit SubstreamRng(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }
  result_type operator()() { return splitmix64_next(state_); }

  // uniform double in [0, 1) with 53-bit resolution
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

// Independent stream seed for repetition `index` under `master_seed`.
inline std::uint64_t substream_seed(std::uint64_t master_seed, std::uint64_t index) {
  std::uint64_t s = master_seed ^ (0xD1B54A32D192ED03ULL * (index + 1));
  std::uint64_t mixed = splitmix64_next(s);
  return mixed ^ splitmix64_next(s);
}

inline SubstreamRng make_substream(std::uint64_t master_seed, std::uint64_t index) {
  return SubstreamRng(substream_seed(master_seed, index));
}

}  // namespace qrcell
