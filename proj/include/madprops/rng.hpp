#pragma once

#include <cstdint>
#include <cmath>

#include "madprops/common.hpp"

namespace madprops {

// Counter-keyed substreams: every draw site is addressed by
// (seed, chain, iteration, purpose, index), so cloud generation is
// bit-reproducible for any worker count and any evaluation order.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

enum class Purpose : std::uint64_t {
  Init = 1,
  Prelim = 2,
  Cloud = 3,
  Select = 4,
  Aux = 5,
  Accept = 6,
  Momentum = 7,
  Exact = 8,
  Scratch = 9,
};

// Lightweight stream over the splitmix64 sequence. Construction is one
// mix, so a fresh substream per proposal is essentially free, and the
// output does not depend on any library's distribution internals.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : state_(splitmix64(key)) {}

  std::uint64_t raw() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  double uniform() {
    return static_cast<double>(raw() >> 11) * 0x1.0p-53;
  }

  // Marsaglia polar method; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  Vec normal_vec(std::size_t d) {
    Vec v(d);
    for (auto& x : v) x = normal();
    return v;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Address of one MCMC step; hands out independent substreams per
// (purpose, index) pair.
struct StepKey {
  std::uint64_t seed = 0;
  std::uint64_t chain = 0;
  std::uint64_t iter = 0;

  RngStream stream(Purpose purpose, std::uint64_t index = 0) const {
    std::uint64_t k = splitmix64(seed);
    k = mix_key(k, chain);
    k = mix_key(k, iter);
    k = mix_key(k, static_cast<std::uint64_t>(purpose));
    k = mix_key(k, index);
    return RngStream(k);
  }
};

}  // namespace madprops
