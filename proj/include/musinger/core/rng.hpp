#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace musinger {

/// Splittable seed source. Every random consumer derives its own engine from
/// the single root seed plus a stream label, so adding a consumer never
/// perturbs the draws of another.
class SeedTree {
 public:
  explicit SeedTree(std::uint64_t root) : root_(root) {}

  std::uint64_t root() const noexcept { return root_; }
  std::uint64_t derive(std::string_view label, std::uint64_t index = 0) const noexcept;
  SeedTree split(std::string_view label, std::uint64_t index = 0) const noexcept {
    return SeedTree(derive(label, index));
  }
  std::mt19937_64 engine(std::string_view label, std::uint64_t index = 0) const {
    return std::mt19937_64(derive(label, index));
  }

 private:
  std::uint64_t root_;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace musinger
