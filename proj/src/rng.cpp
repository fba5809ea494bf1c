#include "dgn/rng.hpp"

#include <cmath>

namespace dgn {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix64(splitmix64(seed) ^ splitmix64(stream * 0xda942042e4dd58b5ull))) {}

std::uint64_t CounterRng::next_u64() {
  return splitmix64(key_ + kGolden * ++counter_);
}

std::uint64_t CounterRng::next_below(std::uint64_t n) {
  // Modulo bias is < 2^-53 for the sizes used here.
  return n == 0 ? 0 : next_u64() % n;
}

double CounterRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double CounterRng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

CounterRng derive_rng(std::uint64_t seed, RngStream stream, std::uint64_t substream) {
  const std::uint64_t mixed =
      splitmix64(static_cast<std::uint64_t>(stream)) ^ splitmix64(substream + 0x5851f42d4c957f2dull);
  return CounterRng(seed, mixed);
}

}  // namespace dgn
