#pragma once

#include <cstdint>
#include <random>

#include "bokehkit/core/image.hpp"

namespace bokehkit {

/// Uniform double in [0,1) from the top 53 bits of the generator. Used
/// instead of std::uniform_real_distribution so that seeded streams are
/// identical across standard library implementations.
inline double canonical_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * canonical_uniform(rng);
}

inline PlaneT<double> random_plane(Index h, Index w, std::mt19937_64& rng,
                                   double lo = 0.0, double hi = 1.0) {
  PlaneT<double> p(h, w);
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) p(i, j) = uniform_in(rng, lo, hi);
  return p;
}

inline ImageT<double> random_image(Index h, Index w, int channels, std::mt19937_64& rng,
                                   double lo = 0.0, double hi = 1.0) {
  ImageT<double> img(h, w, channels);
  for (int c = 0; c < channels; ++c) img.plane(c) = random_plane(h, w, rng, lo, hi);
  return img;
}

inline ImageT<double> random_image(Index h, Index w, int channels, uint64_t seed,
                                   double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  return random_image(h, w, channels, rng, lo, hi);
}

}  // namespace bokehkit
