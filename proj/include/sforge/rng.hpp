#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sforge {

// splitmix64 finalizer, used to derive independent seeds from a master seed
// plus structural indices (trial number, generation number, ...).  Counter
// based derivation means resuming a campaign never has to serialize any
// generator state: the seed for trial t is a pure function of (master, t).
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t index) {
  const uint64_t h = mix64(master ^ mix64(stream));
  return mix64(h ^ mix64(index));
}

// Seed streams.  Every trial gets its own seed so logs can record provenance
// and resumed runs replay bit for bit.
enum : uint64_t {
  kStreamTrial = 1,
  kStreamSnesGen = 2,
  kStreamFinalFit = 3,
};

// Deterministic generator with explicit float mappings.  mt19937_64 output is
// pinned by the standard; uniform_real_distribution is not, so the mappings
// live here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace sforge
