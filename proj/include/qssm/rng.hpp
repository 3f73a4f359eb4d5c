// rng.hpp
// Seed handling and deterministic stream splitting.
//
// All randomness in the library flows from a single 64-bit root seed.
// Independent streams (per worker, per sample, per restart) are derived
// with split_seed(), a splitmix64 hash of (root, index). Results are
// therefore reproducible regardless of how work is distributed over
// threads, as long as every consumer addresses its stream by index.

#pragma once

#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace qssm {

// splitmix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derive the seed of sub-stream `index` from a root seed.
inline std::uint64_t split_seed(std::uint64_t root, std::uint64_t index) {
  return splitmix64(splitmix64(root) ^ splitmix64(index * 0x9e3779b97f4a7c15ULL + 1));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

// Run fn(i) for i in [0, count). Work is chunked over `threads` workers;
// fn must only write to locations owned by its index so that the result
// is independent of the schedule.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const int nw = static_cast<int>(std::min<std::size_t>(threads, count));
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (int w = 0; w < nw; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < count; i += nw) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline int default_thread_count() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace qssm
