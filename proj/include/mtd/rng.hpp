#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mtd {

// Hash a base seed with a tag and two counters into an independent stream seed.
// Used to give every (setting, seed, purpose) cell its own reproducible stream.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// Deterministic random source. The variate transforms are written out here
// rather than taken from <random> distributions, whose output is
// implementation-defined; this keeps run logs bitwise-stable across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi);  // inclusive bounds
  double normal();                  // standard normal, Box-Muller
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  int poisson(double lambda);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mtd
