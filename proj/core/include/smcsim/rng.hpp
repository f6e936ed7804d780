#pragma once

#include <cstdint>

namespace smcsim {

/// Deterministic 64-bit generator (splitmix64). Chosen because the whole
/// algorithm fits in four lines and reproduces bit-exactly in any language,
/// which keeps seeded runs portable across reimplementations. The exact
/// update is documented in docs/file-formats.md and frozen by unit test.
class Rng {
 public:
  Rng() = default;
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 significant bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [0, bound). bound == 0 returns 0. Plain modulo: the bias is
  /// below 2^-40 for every bound this simulator uses, and the reduction is
  /// trivially reproducible.
  uint64_t next_below(uint64_t bound) {
    return bound == 0 ? 0 : next_u64() % bound;
  }

  uint64_t state() const { return state_; }

 private:
  uint64_t state_ = 0;
};

/// Derives an independent stream seed from a base seed and a salt. Used for
/// per-master, per-lane generator streams and per-point sweep seeds so that
/// one master's command sequence never depends on which other masters run.
inline uint64_t derive_seed(uint64_t base, uint64_t salt) {
  Rng mix(base ^ (salt * 0x9e3779b97f4a7c15ull));
  mix.next_u64();
  return mix.next_u64();
}

}  // namespace smcsim
