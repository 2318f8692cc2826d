#pragma once

#include <cstdint>
#include <string_view>

namespace fedlab {

/// PCG32 (XSH-RR variant, 64-bit state, 32-bit output) by M. O'Neill.
///
/// Constants, fixed so that streams are reproducible anywhere:
///   multiplier   6364136223846793005
///   output       xorshift-high by 18, shift 27, rotate by top 5 bits
///   seeding      pcg32_srandom(initstate, initseq): state=0, inc=(initseq<<1)|1,
///                step, state+=initstate, step
/// Derived streams hash the text label with 64-bit FNV-1a (offset 14695981039346656037,
/// prime 1099511628211) and mix it with the seed through SplitMix64
/// (increment 0x9E3779B97F4A7C15, finalizer 0xBF58476D1CE4E5B9 / 0x94D049BB133111EB).
class SeededRng {
 public:
  SeededRng(std::uint64_t init_state, std::uint64_t init_seq);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer in [0, bound). bound must be nonzero.
  std::uint32_t uniform_index(std::uint32_t bound);
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  /// Child stream keyed by a label; does not advance this generator.
  SeededRng spawn(std::string_view label) const;

  std::uint64_t state() const { return state_; }
  std::uint64_t increment() const { return inc_; }

  friend bool operator==(const SeededRng&, const SeededRng&) = default;

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic generator for (seed, label). Distinct labels give independent streams.
SeededRng spawn_rng(std::uint64_t seed, std::string_view label);

}  // namespace fedlab
