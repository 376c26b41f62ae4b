#pragma once

#include <chrono>
#include <cstdint>
#include <random>

#include "bokehkit/core/random.hpp"
#include "bokehkit/harness/evaluate.hpp"
#include "bokehkit/net/tinynet.hpp"

namespace bokehkit {

inline constexpr uint64_t kBenchInputSeed = 12345;

struct BenchResult {
  RuntimeStats stats;
  Index size = 0;
  int warmup = 0;
  int iters = 0;
  uint64_t flops = 0;
};

// Times unet_forward on a fixed seeded random image: `warmup` discarded
// passes, then `iters` measured ones.
inline BenchResult bench_forward(const NetSpec& spec, const WeightStore& weights, Index size,
                                 int warmup, int iters, int jobs = 1) {
  if (iters < 1) throw ValueError("bench_forward: iters must be >= 1");
  if (warmup < 0) throw ValueError("bench_forward: warmup must be >= 0");
  std::mt19937_64 rng(kBenchInputSeed);
  const Image input = random_image(size, size, 3, rng);

  for (int i = 0; i < warmup; ++i) (void)unet_forward(input, weights, spec, jobs);

  std::vector<double> samples;
  samples.reserve(static_cast<size_t>(iters));
  for (int i = 0; i < iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    (void)unet_forward(input, weights, spec, jobs);
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }

  BenchResult result;
  result.stats = summarize_runtimes(std::move(samples));
  result.size = size;
  result.warmup = warmup;
  result.iters = iters;
  result.flops = flop_count(spec, size, size);
  return result;
}

}  // namespace bokehkit
