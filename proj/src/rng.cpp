#include "latrec/rng.hpp"

namespace latrec {

namespace {

// Lemire: maps a 64-bit word to [0, bound) via the high half of a 128-bit
// product; `low < threshold` signals a biased draw that must be redrawn.
inline bool lemire(std::uint64_t word, std::uint64_t bound, std::uint64_t& out) noexcept {
  __extension__ using u128 = unsigned __int128;
  const u128 m = static_cast<u128>(word) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    std::uint64_t threshold = (0 - bound) % bound;
    if (low < threshold) return false;
  }
  out = static_cast<std::uint64_t>(m >> 64);
  return true;
}

}  // namespace

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
  if (bound <= 1) return 0;
  std::uint64_t out = 0;
  while (!lemire((*this)(), bound, out)) {
  }
  return out;
}

std::uint64_t CounterRng::below_at(std::uint64_t counter, std::uint64_t bound) const noexcept {
  if (bound <= 1) return 0;
  std::uint64_t out = 0;
  std::uint64_t word = at(counter);
  while (!lemire(word, bound, out)) word = mix64(word + 0x9e3779b97f4a7c15ULL);
  return out;
}

}  // namespace latrec
