#include "mtd/rng.hpp"

#include <cmath>
#include <numbers>

namespace mtd {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t a, std::uint64_t b) {
  // FNV-1a over the tag, then mixed with the numeric components.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t x = splitmix64(base ^ h);
  x = splitmix64(x ^ a);
  x = splitmix64(x ^ (b + 0x632be59bd9b4e019ULL));
  return x;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int Rng::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(engine_() % span);
}

double Rng::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int Rng::poisson(double lambda) {
  if (lambda <= 0.0) return 0;
  // Knuth's product method; rates here are a handful of boxes per frame.
  const double limit = std::exp(-lambda);
  int k = 0;
  double p = uniform();
  while (p > limit) {
    ++k;
    p *= uniform();
  }
  return k;
}

}  // namespace mtd
