#pragma once

#include <cmath>
#include <cstdint>

namespace deqgp::rng {

// SplitMix64 step; used both as a standalone mixer and to seed streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based stream derivation: every parallel work item gets its own
// statistically independent generator from (root_seed, stream_index), so
// scheduling order can never change which numbers a work item sees.
inline std::uint64_t derive_stream_seed(std::uint64_t root_seed, std::uint64_t stream) {
  std::uint64_t s = root_seed ^ (stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  return splitmix64(s);
}

// xoshiro256++ (Blackman/Vigna). Hand-rolled so the byte stream is identical
// on every platform, unlike the distributions in <random>.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in (0,1]; the top 53 bits give a fully specified mapping.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform double in (-1,1).
  double next_symmetric() { return 2.0 * next_unit() - 1.0; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

// Marsaglia polar normal sampler. Caches the second variate of each pair.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = engine_.next_symmetric();
      v = engine_.next_symmetric();
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double r = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * r;
    has_spare_ = true;
    return u * r;
  }

  template <typename Scalar>
  void fill(Scalar* data, std::size_t count, double stddev) {
    for (std::size_t i = 0; i < count; ++i)
      data[i] = static_cast<Scalar>(stddev * next());
  }

 private:
  Xoshiro256 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace deqgp::rng
