#include "wmfield/rng.hpp"

#include <cmath>

namespace wmf {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix_next(std::uint64_t& state) {
  std::uint64_t z = (state += kGolden);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t mix_u64(std::uint64_t z) {
  std::uint64_t s = z;
  return splitmix_next(s);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t h = mix_u64(root ^ 0xA0761D6478BD642FULL);
  h = mix_u64(h ^ a);
  h = mix_u64(h ^ b);
  h = mix_u64(h ^ c);
  return h;
}

SubStream::SubStream(std::uint64_t seed, std::uint64_t index)
    : state_(derive_seed(seed, index, 0x5851F42D4C957F2DULL)) {}

std::uint64_t SubStream::next_u64() { return splitmix_next(state_); }

double SubStream::next_unit() {
  const std::uint64_t bits = next_u64() >> 11;  // 53 random bits
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double SubStream::next_normal() {
  const double u1 = next_unit();
  const double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace wmf
