#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ssimrc {

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int64_t area() const { return int64_t(w) * int64_t(h); }
  bool empty() const { return w <= 0 || h <= 0; }
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) {
    throw std::invalid_argument(msg);
  }
}

inline double clamp_to(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

// Chunked index-space parallelism. Callers may only write to disjoint,
// index-owned slots, so the result does not depend on the chunking and a
// run with N threads is byte-identical to a single-threaded run.
template <typename Body>
void parallel_for(int n, int threads, Body&& body) {
  if (n <= 0) {
    return;
  }
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) {
      break;
    }
    pool.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) {
        body(i);
      }
    });
  }
  for (auto& th : pool) {
    th.join();
  }
}

// splitmix64: small deterministic generator for synthetic content and
// property tests. Not a std engine so streams are identical on every
// platform and toolchain.
struct SplitMix64 {
  uint64_t state = 0x9e3779b97f4a7c15ull;

  explicit SplitMix64(uint64_t seed = 0x9e3779b97f4a7c15ull) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return n ? next() % n : 0; }
};

inline uint64_t fnv1a_hash(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h = (h ^ c) * 0x100000001b3ull;
  }
  return h;
}

}  // namespace ssimrc
