#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace multiroi {

/// 64-bit FNV-1a. Stable across platforms; used for cache keys and config stamps.
class Fnv1a {
 public:
  Fnv1a& update(std::span<const std::byte> bytes);
  Fnv1a& update(std::string_view text);
  std::uint64_t value() const noexcept { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t value);

/// splitmix64 step; derives independent stream seeds from (seed, index) pairs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace multiroi
