#pragma once

#include <cstdint>
#include <functional>
#include <random>

namespace hte {

// Runs fn(0..n-1) on up to `workers` threads (0 = hardware concurrency).
// Work items claim indices from a shared counter; callers that need
// deterministic output must write results into per-index slots.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

// Independent per-task RNG stream: identical draws for a (seed, stream)
// pair regardless of how tasks are scheduled onto threads.
std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t stream);

// splitmix64-style mix for deriving child seeds.
std::uint64_t mix64(std::uint64_t seed, std::uint64_t salt);

// Thin wrapper over the (standard-specified) mt19937_64 output stream with
// distribution transforms pinned here, so draws do not depend on the
// standard library's distribution implementations.
struct Rng {
  std::mt19937_64 eng;
  bool has_spare = false;
  double spare = 0.0;

  explicit Rng(std::mt19937_64 e) : eng(std::move(e)) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : eng(rng_stream(seed, stream)) {}

  double uniform01() { return (eng() >> 11) * 0x1.0p-53; }

  // Box-Muller standard normal.
  double normal();

  // Unbiased draw from {0, ..., n-1}.
  int below(int n);

  bool coin() { return (eng() & 1) != 0; }
};

}  // namespace hte
