#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace uwsim {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a over a string, stable across platforms (std::hash is not).
constexpr std::uint64_t hash_name(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Episode seed depends only on (global seed, task id, episode index), so
/// adding tasks to a batch never changes existing episodes.
constexpr std::uint64_t derive_episode_seed(std::uint64_t global_seed, std::string_view task_id,
                                            std::uint64_t episode_index) {
  return mix64(mix64(global_seed ^ hash_name(task_id)) + episode_index);
}

}  // namespace uwsim
