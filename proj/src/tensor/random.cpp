// SPDX-License-Identifier: Apache-2.0
#include "tensor/random.hpp"

namespace cgnmt {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage, std::uint64_t index) {
  // splitmix64 over the seed, an FNV-1a hash of the stage name and the index.
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : stage) {
    h ^= std::uint8_t(c);
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ (h + 0x9E3779B97F4A7C15ULL + (index << 6) + (index >> 2));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace cgnmt
