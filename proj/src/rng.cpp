#include "fedlab/rng.hpp"

#include <cmath>
#include <numbers>

#include "fedlab/errors.hpp"

namespace fedlab {

namespace {
constexpr std::uint64_t kPcgMultiplier = 6364136223846793005ULL;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

SeededRng::SeededRng(std::uint64_t init_state, std::uint64_t init_seq) {
  state_ = 0;
  inc_ = (init_seq << 1U) | 1U;
  next_u32();
  state_ += init_state;
  next_u32();
}

std::uint32_t SeededRng::next_u32() {
  const std::uint64_t old = state_;
  state_ = old * kPcgMultiplier + inc_;
  const auto xorshifted = static_cast<std::uint32_t>(((old >> 18U) ^ old) >> 27U);
  const auto rot = static_cast<std::uint32_t>(old >> 59U);
  return (xorshifted >> rot) | (xorshifted << ((32U - rot) & 31U));
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t hi = next_u32();
  return (hi << 32U) | next_u32();
}

double SeededRng::uniform() { return static_cast<double>(next_u64() >> 11U) * 0x1.0p-53; }

std::uint32_t SeededRng::uniform_index(std::uint32_t bound) {
  if (bound == 0) throw DomainError("uniform_index: bound must be positive");
  const std::uint32_t threshold = (0U - bound) % bound;
  for (;;) {
    const std::uint32_t r = next_u32();
    if (r >= threshold) return r % bound;
  }
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(theta);
  has_spare_ = true;
  return radius * std::cos(theta);
}

SeededRng SeededRng::spawn(std::string_view label) const {
  return spawn_rng(state_ ^ splitmix64(inc_), label);
}

SeededRng spawn_rng(std::uint64_t seed, std::string_view label) {
  const std::uint64_t h = fnv1a64(label);
  return SeededRng(splitmix64(seed ^ splitmix64(h)), splitmix64(h + seed));
}

}  // namespace fedlab
