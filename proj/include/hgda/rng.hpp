#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace hgda {

// Counter-based splittable generator. The i-th output of a stream is a pure
// function of (key, i), so independently keyed child streams can be consumed
// in parallel and still reproduce the sequential draw order exactly.
class SplitRng {
 public:
  SplitRng() = default;
  explicit SplitRng(uint64_t seed, uint64_t stream = 0)
      : key_(derive_key(seed, stream)) {}

  uint64_t next_u64() { return mix(key_, counter_++); }

  // Child stream; does not advance this stream's counter.
  SplitRng split(uint64_t tag) const {
    SplitRng child;
    child.key_ = derive_key(key_, tag ^ 0x9e3779b97f4a7c15ull);
    return child;
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Unbiased integer on [0, n), n > 0. Lemire multiply-shift with rejection.
  uint64_t next_below(uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<uint64_t>(m);
    if (lo < n) {
      const uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // Standard normal via Box-Muller; avoids std::normal_distribution, whose
  // output is implementation-defined.
  double next_normal() {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  uint64_t key() const noexcept { return key_; }
  uint64_t counter() const noexcept { return counter_; }
  void set_counter(uint64_t counter) noexcept { counter_ = counter; }

 private:
  static uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  static uint64_t derive_key(uint64_t a, uint64_t b) {
    return splitmix(a ^ splitmix(b));
  }

  static uint64_t mix(uint64_t key, uint64_t counter) {
    return splitmix(key + splitmix(counter));
  }

  uint64_t key_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace hgda
