#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gohr {

// Seedable stream used for every random draw in the project.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are not portable across library
// implementations, so bounded integers and unit reals are derived here:
// integers by rejection on the top bits, reals from the top 53 bits.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform over [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Uniform over the closed range [lo, hi].
  int uniform_int(int lo, int hi);

  // Uniform over [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; a bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t x);

// Independent stream seed for (base, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// Seed for a named cell of an experiment: FNV-1a over the name, mixed with
// the master seed and the index.
std::uint64_t hash_seed(std::uint64_t master, std::string_view name, std::uint64_t index);

}  // namespace gohr
