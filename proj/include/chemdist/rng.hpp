#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace chemdist {

/// Bijective 64-bit finalizer (SplitMix64 output function).
std::uint64_t mix64(std::uint64_t z);

/// Stable 64-bit tag for a string (FNV-1a), used to separate experiment streams.
std::uint64_t tag_of(std::string_view name);

/// Derives an independent key from a master seed and an ordered list of tags.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

/// Counter-based value: the `counter`-th 64-bit word of the stream keyed by `key`.
inline std::uint64_t counter_bits(std::uint64_t key, std::uint64_t counter) {
  return mix64(mix64(key) ^ (counter * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL));
}

/// Uniform double in [0, 1) built from the top 53 bits.
inline double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Bernoulli(p) outcome for slot `counter` of stream `key`. p >= 1 is always true, p <= 0 never.
inline bool bernoulli_at(std::uint64_t key, std::uint64_t counter, double p) {
  return unit_interval(counter_bits(key, counter)) < p;
}

/// Sequential generator over a counter-based stream; satisfies UniformRandomBitGenerator.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  explicit CounterStream(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return counter_bits(key_, next_++); }

 private:
  std::uint64_t key_;
  std::uint64_t next_ = 0;
};

}  // namespace chemdist
