#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace krigeweight {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for (master, replicate, stage, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (auto p : path) {
    h = splitmix64(h ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
  }
  return h;
}

}  // namespace krigeweight
