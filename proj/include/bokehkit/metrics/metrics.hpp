#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "bokehkit/core/image.hpp"

namespace bokehkit {

/// Gaussian-window SSIM configuration. Defaults are the de facto standard
/// constants; dynamic_range matches this library's [0,1] pixel domain.
template <typename Scalar>
struct SsimParamsT {
  Index window_size = 11;
  Scalar window_sigma = Scalar(1.5);
  Scalar k1 = Scalar(0.01);
  Scalar k2 = Scalar(0.03);
  Scalar dynamic_range = Scalar(1);

  void validate() const {
    if (window_size < 3 || window_size % 2 == 0)
      throw ValueError("ssim window_size must be odd and >= 3");
    if (!(k1 > 0) || !(k2 > 0)) throw ValueError("ssim k1/k2 must be positive");
    if (!(dynamic_range > 0)) throw ValueError("ssim dynamic_range must be positive");
    if (!(window_sigma > 0)) throw ValueError("ssim window_sigma must be positive");
  }
};

using SsimParams = SsimParamsT<double>;

// PSNR of identical images is capped here instead of returning infinity,
// keeping downstream score arithmetic finite.
inline constexpr double kPsnrCapDb = 100.0;

template <typename Scalar>
Scalar mse(const ImageT<Scalar>& a, const ImageT<Scalar>& b) {
  if (!a.same_shape(b)) throw ShapeError("mse: image shapes differ");
  Scalar acc = 0;
  for (int c = 0; c < a.channels(); ++c)
    acc += (a.plane(c) - b.plane(c)).square().sum();
  return acc / static_cast<Scalar>(a.value_count());
}

/// Peak signal-to-noise ratio in dB, MSE pooled over all channels.
template <typename Scalar>
Scalar psnr(const ImageT<Scalar>& a, const ImageT<Scalar>& b, Scalar peak = Scalar(1)) {
  if (!(peak > 0)) throw ValueError("psnr peak must be positive");
  const Scalar m = mse(a, b);
  if (m == Scalar(0)) return Scalar(kPsnrCapDb);
  const Scalar value = Scalar(10) * std::log10(peak * peak / m);
  return std::min(value, Scalar(kPsnrCapDb));
}

template <typename Scalar>
std::vector<Scalar> gaussian_taps(Index n, Scalar sigma) {
  std::vector<Scalar> g(static_cast<size_t>(n));
  const Index r = n / 2;
  Scalar sum = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar d = static_cast<Scalar>(i - r);
    g[static_cast<size_t>(i)] = std::exp(-(d * d) / (2 * sigma * sigma));
    sum += g[static_cast<size_t>(i)];
  }
  for (auto& v : g) v /= sum;
  return g;
}

namespace detail {

// Separable valid-region correlation with a normalized 1D tap set.
template <typename Scalar>
PlaneT<Scalar> filter_valid(const PlaneT<Scalar>& in, const std::vector<Scalar>& taps) {
  const Index n = static_cast<Index>(taps.size());
  const Index h = in.rows(), w = in.cols();
  PlaneT<Scalar> horiz(h, w - n + 1);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j + n <= w; ++j) {
      Scalar acc = 0;
      for (Index t = 0; t < n; ++t) acc += taps[static_cast<size_t>(t)] * in(i, j + t);
      horiz(i, j) = acc;
    }
  }
  PlaneT<Scalar> out(h - n + 1, w - n + 1);
  for (Index i = 0; i + n <= h; ++i) {
    for (Index j = 0; j < horiz.cols(); ++j) {
      Scalar acc = 0;
      for (Index t = 0; t < n; ++t) acc += taps[static_cast<size_t>(t)] * horiz(i + t, j);
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace detail

/// Windowed local statistics shared by ssim, ms_ssim and the ssim-loss
/// gradient. All maps cover the valid window positions only.
template <typename Scalar>
struct SsimStatsT {
  PlaneT<Scalar> mu_x, mu_y, var_x, var_y, cov;
};

template <typename Scalar>
SsimStatsT<Scalar> ssim_local_stats(const PlaneT<Scalar>& x, const PlaneT<Scalar>& y,
                                    const SsimParamsT<Scalar>& p) {
  p.validate();
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw ShapeError("ssim: image shapes differ");
  if (x.rows() < p.window_size || x.cols() < p.window_size)
    throw ShapeError("ssim: window larger than image");
  const auto taps = gaussian_taps<Scalar>(p.window_size, p.window_sigma);
  SsimStatsT<Scalar> s;
  s.mu_x = detail::filter_valid<Scalar>(x, taps);
  s.mu_y = detail::filter_valid<Scalar>(y, taps);
  s.var_x = detail::filter_valid<Scalar>((x * x).eval(), taps) - s.mu_x.square();
  s.var_y = detail::filter_valid<Scalar>((y * y).eval(), taps) - s.mu_y.square();
  s.cov = detail::filter_valid<Scalar>((x * y).eval(), taps) - s.mu_x * s.mu_y;
  return s;
}

template <typename Scalar>
Scalar ssim_plane(const PlaneT<Scalar>& x, const PlaneT<Scalar>& y,
                  const SsimParamsT<Scalar>& p) {
  const auto s = ssim_local_stats(x, y, p);
  const Scalar c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const Scalar c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  const auto num = (2 * s.mu_x * s.mu_y + c1) * (2 * s.cov + c2);
  const auto den = (s.mu_x.square() + s.mu_y.square() + c1) * (s.var_x + s.var_y + c2);
  return (num / den).mean();
}

/// Mean local SSIM over a Gaussian window; multi-channel images average
/// their per-channel scores.
template <typename Scalar>
Scalar ssim(const ImageT<Scalar>& a, const ImageT<Scalar>& b,
            const SsimParamsT<Scalar>& p = SsimParamsT<Scalar>{}) {
  if (!a.same_shape(b)) throw ShapeError("ssim: image shapes differ");
  Scalar acc = 0;
  for (int c = 0; c < a.channels(); ++c) acc += ssim_plane(a.plane(c), b.plane(c), p);
  return acc / static_cast<Scalar>(a.channels());
}

// Canonical 5-scale MS-SSIM exponents; renormalized over however many
// levels are requested so that levels=1 degenerates to plain ssim.
inline constexpr double kMsSsimWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

namespace detail {

template <typename Scalar>
PlaneT<Scalar> downsample2x2(const PlaneT<Scalar>& in) {
  const Index h = in.rows() / 2, w = in.cols() / 2;
  PlaneT<Scalar> out(h, w);
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j)
      out(i, j) = (in(2 * i, 2 * j) + in(2 * i, 2 * j + 1) + in(2 * i + 1, 2 * j) +
                   in(2 * i + 1, 2 * j + 1)) /
                  Scalar(4);
  return out;
}

template <typename Scalar>
Scalar ms_ssim_plane(PlaneT<Scalar> x, PlaneT<Scalar> y, const SsimParamsT<Scalar>& p,
                     int levels) {
  const Scalar c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const Scalar c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  Scalar weight_sum = 0;
  for (int l = 0; l < levels; ++l) weight_sum += Scalar(kMsSsimWeights[l]);

  Scalar product = 1;
  for (int l = 0; l < levels; ++l) {
    const Scalar w = Scalar(kMsSsimWeights[l]) / weight_sum;
    const auto s = ssim_local_stats(x, y, p);
    if (l + 1 == levels) {
      const auto num = (2 * s.mu_x * s.mu_y + c1) * (2 * s.cov + c2);
      const auto den = (s.mu_x.square() + s.mu_y.square() + c1) * (s.var_x + s.var_y + c2);
      const Scalar full = (num / den).mean();
      // w is exactly 1 in the single-level configuration; skip the
      // negative clamp there so levels=1 degenerates to plain ssim
      product *= (w == Scalar(1)) ? full : std::pow(std::max(full, Scalar(0)), w);
    } else {
      const Scalar cs = ((2 * s.cov + c2) / (s.var_x + s.var_y + c2)).mean();
      product *= std::pow(std::max(cs, Scalar(0)), w);
      x = downsample2x2(x);
      y = downsample2x2(y);
    }
  }
  return product;
}

}  // namespace detail

/// Multi-scale SSIM: contrast/structure terms at each scale, the full
/// index at the coarsest, combined as a weighted product. Downsampling is
/// 2x2 average pooling.
template <typename Scalar>
Scalar ms_ssim(const ImageT<Scalar>& a, const ImageT<Scalar>& b,
               const SsimParamsT<Scalar>& p = SsimParamsT<Scalar>{}, int levels = 5) {
  if (!a.same_shape(b)) throw ShapeError("ms_ssim: image shapes differ");
  if (levels < 1 || levels > 5) throw ValueError("ms_ssim levels must be in [1,5]");
  const Index need = p.window_size * (Index(1) << (levels - 1));
  if (a.height() < need || a.width() < need)
    throw ShapeError("ms_ssim: image too small for requested levels");
  Scalar acc = 0;
  for (int c = 0; c < a.channels(); ++c)
    acc += detail::ms_ssim_plane<Scalar>(a.plane(c), b.plane(c), p, levels);
  return acc / static_cast<Scalar>(a.channels());
}

/// One challenge leaderboard record.
struct LeaderboardRow {
  std::string team;
  double psnr = 0;
  double ssim = 0;
  double runtime_ms = 0;
  double score = 0;

  void validate() const {
    if (std::isfinite(psnr) && psnr < 0) throw ValueError("leaderboard psnr must be >= 0");
    if (!(runtime_ms > 0)) throw ValueError("leaderboard runtime must be positive");
    if (!(score >= 0)) throw ValueError("leaderboard score must be >= 0");
  }
};

/// Fidelity-vs-speed composite: 2^(2*psnr) / (c * runtime_ms).
inline double challenge_score(double psnr_db, double runtime_ms, double c) {
  if (!(runtime_ms > 0)) throw ValueError("challenge_score: runtime must be positive");
  if (!(c > 0)) throw ValueError("challenge_score: normalization constant must be positive");
  return std::exp2(2.0 * psnr_db) / (c * runtime_ms);
}

/// Recover the normalization constant from a published row:
/// c = 2^(2*psnr) / (score * runtime_ms).
inline double calibrate_score_constant(const LeaderboardRow& row) {
  if (!(row.score > 0)) throw ValueError("calibrate_score_constant: score must be positive");
  if (!(row.runtime_ms > 0))
    throw ValueError("calibrate_score_constant: runtime must be positive");
  return std::exp2(2.0 * row.psnr) / (row.score * row.runtime_ms);
}

/// Published MAI 2022 bokeh challenge results (track 1, rows with a valid
/// on-device runtime). Consumed as data by tests and the leaderboard tool.
inline const std::vector<LeaderboardRow>& mai2022_reference_rows() {
  static const std::vector<LeaderboardRow> rows = {
      {"Antins_cv", 22.76, 0.8652, 28.1, 74.0},
      {"ENERZAi", 22.89, 0.8754, 89.3, 28.0},
      {"MiAIgo", 20.08, 0.7209, 112.0, 0.5},
      {"PyNET", 23.28, 0.8780, 3512.0, 1.2},
  };
  return rows;
}

/// Normalization constant calibrated on the winning row; the default for
/// score computations throughout the toolkit.
inline double default_score_constant() {
  return calibrate_score_constant(mai2022_reference_rows().front());
}

}  // namespace bokehkit
