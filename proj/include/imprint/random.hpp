#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace imprint::rng {

// The standard distributions and std::shuffle are implementation-defined, so
// anything that must replay byte-for-byte across toolchains goes through these.

// Uniform in [0, bound) by rejection sampling. bound must be positive.
inline std::uint64_t below(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& gen) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(below(gen, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace imprint::rng
