#pragma once

#include <cstdint>
#include <string_view>

namespace medv {

// 64-bit FNV-1a. Stable across platforms and runs; used for mock lookup keys,
// hashed embedding buckets and per-item seeds.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Mixes several fields into one hash; each field is length-prefixed so
// ("ab","c") and ("a","bc") differ.
template <typename... Parts>
constexpr std::uint64_t hash_fields(const Parts&... parts) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view p) {
    const std::uint64_t n = p.size();
    for (int i = 0; i < 8; ++i) {
      h ^= static_cast<unsigned char>(n >> (8 * i));
      h *= 0x100000001b3ULL;
    }
    h = fnv1a64(p, h);
  };
  (mix(std::string_view(parts)), ...);
  return h;
}

}  // namespace medv
