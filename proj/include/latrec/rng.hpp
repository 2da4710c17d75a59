#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace latrec {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the i-th draw of a stream is a pure function of
/// (key, i). Streams are derived from a parent key with split(), so world
/// generation, lazy item typing and algorithm randomness never share state.
///
/// All derived quantities (bounded integers, unit reals, shuffles) are
/// implemented here rather than through <random> distributions, whose output
/// is implementation-defined. Traces are therefore identical across standard
/// libraries.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(mix64(mix64(seed) ^ (stream * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  /// Independent child stream identified by `tag`.
  constexpr CounterRng split(std::uint64_t tag) const noexcept { return CounterRng(key_, tag + 1); }

  /// Random word at an absolute counter position; does not advance.
  constexpr std::uint64_t at(std::uint64_t counter) const noexcept {
    return mix64(mix64(key_ ^ (counter * 0xd1342543de82ef95ULL)) + key_);
  }

  constexpr std::uint64_t operator()() noexcept { return at(counter_++); }

  /// Uniform integer in [0, bound). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Uniform integer in [0, bound) from the word at `counter`, using
  /// counter-local rejection so the result depends on (key, counter) only.
  std::uint64_t below_at(std::uint64_t counter, std::uint64_t bound) const noexcept;

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Fair ±1.
  int sign() noexcept { return ((*this)() >> 63) ? 1 : -1; }

  template <typename T>
  void shuffle(std::span<T> values) noexcept {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(values[i - 1], values[j]);
    }
  }

  std::uint64_t counter() const noexcept { return counter_; }
  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace latrec
