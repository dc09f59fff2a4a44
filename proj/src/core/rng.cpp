#include "musinger/core/rng.hpp"

namespace musinger {

std::uint64_t SeedTree::derive(std::string_view label, std::uint64_t index) const noexcept {
  // FNV-1a over the label, then mixed with the root and index.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return mix64(mix64(root_ ^ h) + index);
}

}  // namespace musinger
