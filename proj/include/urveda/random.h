#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace urveda {

// Seeded generator with platform-independent derived distributions (the
// std:: distributions are implementation-defined, which would break
// cross-toolchain reproducibility of initializations and phantoms).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Deterministic child seed for stream `stream` of `master` (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace urveda
