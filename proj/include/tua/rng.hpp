#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tua {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + (b * 0xbf58476d1ce4e5b9ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for a named sub-stream, e.g. derive_seed(seed, {episode, kDeploymentStream}).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = root;
  for (auto p : path) s = mix_seed(s, p);
  return s;
}

inline Rng make_stream(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(root, path));
}

// Stream tags. Keeping them distinct keeps e.g. action sampling from
// perturbing the channel draws that baselines are scored on.
enum StreamTag : std::uint64_t {
  kDeploymentStream = 1,
  kChannelStream = 2,
  kDropoutStream = 3,
  kActionStream = 4,
  kShuffleStream = 5,
  kInitStream = 6,
};

}  // namespace tua
