#pragma once

#include <cstdint>

namespace dgn {

// Stream ids keep weight init, dropout, shuffling and data synthesis on
// independent deterministic sequences derived from one master seed.
enum class RngStream : std::uint64_t {
  kWeights = 1,
  kDropout = 2,
  kShuffle = 3,
  kSynthesis = 4,
};

// Counter-based generator: draw i is a pure function of (seed, stream, i),
// so determinism survives reordering of unrelated draws.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, RngStream stream)
      : CounterRng(seed, static_cast<std::uint64_t>(stream)) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  std::uint64_t next_below(std::uint64_t n);  // [0, n)
  double uniform();                           // [0, 1)
  double uniform(double lo, double hi);
  double normal();                            // standard normal

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Sub-keyed generator, e.g. one independent stream per fold or per epoch.
CounterRng derive_rng(std::uint64_t seed, RngStream stream, std::uint64_t substream);

}  // namespace dgn
