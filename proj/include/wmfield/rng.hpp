#pragma once

#include <cstdint>

namespace wmf {

// splitmix64 finalizer; stateless avalanche of one word.
std::uint64_t mix_u64(std::uint64_t z);

// Hash-combines up to four words into a stream seed.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

// Counter-based substream: one per (seed, index).  A substream may serve any
// number of draws, and its output never depends on what other indices consumed,
// so coefficient draws are reproducible under truncation changes and
// evaluation-order changes.
class SubStream {
 public:
  SubStream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64();
  double next_unit();    // uniform on (0, 1), endpoints excluded
  double next_normal();  // standard normal via Box-Muller (cosine branch)

 private:
  std::uint64_t state_;
};

}  // namespace wmf
