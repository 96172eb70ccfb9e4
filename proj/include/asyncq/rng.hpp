#pragma once

#include <cstdint>
#include <random>

namespace asyncq {

// All stochastic components draw from this engine type. Each worker thread
// owns a private instance; nothing in the library shares engines across
// threads.
using Rng = std::mt19937_64;

/// SplitMix64 step: advances `state` and returns the next output word.
/// Used only to spread seed material, not as the main generator.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a decorrelated 64-bit seed for stream `stream` of a run seeded
/// with `seed`. Distinct streams of the same run map to distinct SplitMix64
/// states, so the derived seeds are well separated even for adjacent ids.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  return splitmix64(state);
}

/// Builds the private random stream for one worker thread.
inline Rng make_worker_rng(std::uint64_t seed, std::uint64_t worker_id) {
  return Rng(derive_stream_seed(seed, worker_id));
}

}  // namespace asyncq
