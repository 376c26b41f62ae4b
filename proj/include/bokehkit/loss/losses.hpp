#pragma once

#include <array>
#include <cmath>

#include "bokehkit/core/image.hpp"
#include "bokehkit/core/image_ops.hpp"
#include "bokehkit/loss/mask.hpp"
#include "bokehkit/metrics/metrics.hpp"

namespace bokehkit {

/// Coefficients of the composite pre-training loss. Defaults are the
/// published values; beta and lambda belong to the adversarial refinement
/// stage and are carried along for completeness.
struct LossWeights {
  double alpha = 0.5;
  double beta = 0.1;
  double zeta = 0.05;
  double lambda = 1.0;
  double kappa = 0.005;
  double mu = 0.1;
  double nu = 0.005;
};

enum class SobelDirection { x, y, xy, yx };

inline constexpr std::array<SobelDirection, 4> kAllSobelDirections = {
    SobelDirection::x, SobelDirection::y, SobelDirection::xy, SobelDirection::yx};

/// The fixed 3x3 edge kernels: axis-aligned Sobel plus the standard
/// 45/135-degree diagonal variants.
template <typename Scalar>
const Kernel2DT<Scalar>& sobel_kernel(SobelDirection dir) {
  static const Kernel2DT<Scalar> kx = Kernel2DT<Scalar>::from_rows({{-1, 0, 1},
                                                                    {-2, 0, 2},
                                                                    {-1, 0, 1}});
  static const Kernel2DT<Scalar> ky = Kernel2DT<Scalar>::from_rows({{-1, -2, -1},
                                                                    {0, 0, 0},
                                                                    {1, 2, 1}});
  static const Kernel2DT<Scalar> kxy = Kernel2DT<Scalar>::from_rows({{2, 1, 0},
                                                                     {1, 0, -1},
                                                                     {0, -1, -2}});
  static const Kernel2DT<Scalar> kyx = Kernel2DT<Scalar>::from_rows({{0, 1, 2},
                                                                     {-1, 0, 1},
                                                                     {-2, -1, 0}});
  switch (dir) {
    case SobelDirection::x: return kx;
    case SobelDirection::y: return ky;
    case SobelDirection::xy: return kxy;
    case SobelDirection::yx: return kyx;
  }
  throw ValueError("unknown sobel direction");
}

template <typename Scalar>
ImageT<Scalar> sobel_edge_map(const ImageT<Scalar>& img, SobelDirection dir) {
  if (img.channels() != 1) throw ShapeError("sobel_edge_map expects a single-channel image");
  return convolve2d(img, sobel_kernel<Scalar>(dir));
}

/// Negated mean L1 edge response of the mask-gated luma over the four
/// directional kernels; always <= 0, more negative = sharper foreground.
template <typename Scalar>
Scalar foreground_edge_loss(const ImageT<Scalar>& pred, const SaliencyMaskT<Scalar>& m) {
  m.require_matches(pred.height(), pred.width());
  const PlaneT<Scalar> gated = gray_plane(pred) * m.values;
  Scalar total = 0;
  for (SobelDirection dir : kAllSobelDirections)
    total += correlate_replicate(gated, sobel_kernel<Scalar>(dir)).abs().sum();
  return -total / static_cast<Scalar>(pred.pixel_count());
}

/// Absolute difference between the edge strengths of prediction and input
/// under the same mask; zero when they match.
template <typename Scalar>
Scalar edge_difference_loss(const ImageT<Scalar>& input, const ImageT<Scalar>& pred,
                            const SaliencyMaskT<Scalar>& m) {
  if (input.height() != pred.height() || input.width() != pred.width())
    throw ShapeError("edge_difference_loss: image sizes differ");
  return std::abs(std::abs(foreground_edge_loss(pred, m)) -
                  std::abs(foreground_edge_loss(input, m)));
}

// Anisotropic total variation: L1 of forward differences, no wraparound.
template <typename Scalar>
Scalar total_variation(const PlaneT<Scalar>& u) {
  const Index h = u.rows(), w = u.cols();
  Scalar tv = 0;
  if (w > 1) tv += (u.rightCols(w - 1) - u.leftCols(w - 1)).abs().sum();
  if (h > 1) tv += (u.bottomRows(h - 1) - u.topRows(h - 1)).abs().sum();
  return tv;
}

/// Mean total variation of the background (mask-complement-gated) luma.
template <typename Scalar>
Scalar background_blur_loss(const ImageT<Scalar>& pred, const SaliencyMaskT<Scalar>& m) {
  m.require_matches(pred.height(), pred.width());
  const PlaneT<Scalar> gated = gray_plane(pred) * (Scalar(1) - m.values);
  return total_variation(gated) / static_cast<Scalar>(pred.pixel_count());
}

template <typename Scalar>
Scalar l1_loss(const ImageT<Scalar>& pred, const ImageT<Scalar>& target) {
  if (!pred.same_shape(target)) throw ShapeError("l1_loss: image shapes differ");
  Scalar acc = 0;
  for (int c = 0; c < pred.channels(); ++c)
    acc += (pred.plane(c) - target.plane(c)).abs().sum();
  return acc / static_cast<Scalar>(pred.value_count());
}

// Guards the mask-mass normalization of the masked L1 losses.
inline constexpr double kMaskMassEpsilon = 1e-8;

/// L1 restricted to the mask, normalized by mask mass (not image area);
/// set background=true to gate by the mask complement instead.
template <typename Scalar>
Scalar masked_l1_loss(const ImageT<Scalar>& pred, const ImageT<Scalar>& target,
                      const SaliencyMaskT<Scalar>& m, bool background = false) {
  if (!pred.same_shape(target)) throw ShapeError("masked_l1_loss: image shapes differ");
  m.require_matches(pred.height(), pred.width());
  const PlaneT<Scalar> gate =
      background ? PlaneT<Scalar>(Scalar(1) - m.values) : m.values;
  const Scalar mass = std::max(gate.sum(), Scalar(kMaskMassEpsilon));
  Scalar acc = 0;
  for (int c = 0; c < pred.channels(); ++c)
    acc += ((pred.plane(c) - target.plane(c)).abs() * gate).sum() / mass;
  return acc / static_cast<Scalar>(pred.channels());
}

template <typename Scalar>
Scalar ssim_loss(const ImageT<Scalar>& pred, const ImageT<Scalar>& target,
                 const SsimParamsT<Scalar>& p = SsimParamsT<Scalar>{}) {
  return Scalar(1) - ssim(pred, target, p);
}

inline constexpr int kDefaultHistogramBins = 32;

namespace detail {

// Triangular soft-binning weight of value v for bin b: bins are centered
// at (b+0.5)/bins with unit-width support in bin units.
template <typename Scalar>
Scalar triangular_weight(Scalar v, int b, int bins) {
  const Scalar center = (Scalar(b) + Scalar(0.5)) / Scalar(bins);
  const Scalar d = std::abs(v - center) * Scalar(bins);
  return d < Scalar(1) ? Scalar(1) - d : Scalar(0);
}

template <typename Scalar>
std::vector<Scalar> soft_histogram(const PlaneT<Scalar>& plane, int bins) {
  std::vector<Scalar> hist(static_cast<size_t>(bins), Scalar(0));
  const Scalar* data = plane.data();
  const Index n = plane.size();
  for (Index i = 0; i < n; ++i) {
    const Scalar v = data[i];
    // Only the bins whose centers lie within one bin width matter.
    const int lo = std::max(0, static_cast<int>(std::floor(v * bins - Scalar(1.5))));
    const int hi = std::min(bins - 1, static_cast<int>(std::ceil(v * bins + Scalar(0.5))));
    for (int b = lo; b <= hi; ++b) hist[static_cast<size_t>(b)] += triangular_weight(v, b, bins);
  }
  Scalar mass = 0;
  for (Scalar h : hist) mass += h;
  if (mass > 0)
    for (auto& h : hist) h /= mass;
  return hist;
}

}  // namespace detail

/// Color-distribution loss: L1 distance between soft-binned normalized
/// per-channel histograms, summed over R, G, B.
template <typename Scalar>
Scalar histogram_loss(const ImageT<Scalar>& pred, const ImageT<Scalar>& target,
                      int bins = kDefaultHistogramBins) {
  if (pred.channels() != 3 || target.channels() != 3)
    throw ShapeError("histogram_loss expects 3-channel images");
  if (bins < 2) throw ValueError("histogram_loss needs at least 2 bins");
  Scalar total = 0;
  for (int c = 0; c < 3; ++c) {
    const auto hp = detail::soft_histogram(pred.plane(c), bins);
    const auto ht = detail::soft_histogram(target.plane(c), bins);
    for (int b = 0; b < bins; ++b)
      total += std::abs(hp[static_cast<size_t>(b)] - ht[static_cast<size_t>(b)]);
  }
  return total;
}

/// Per-term breakdown of the composite pre-training loss.
struct PretrainBreakdown {
  double l1 = 0;
  double ssim = 0;
  double edge_difference = 0;
  double background_blur = 0;
  double foreground_edge = 0;
  double total = 0;
};

/// alpha*L1 + zeta*Lssim + kappa*Ledgediff + mu*Lbackblur + nu*Lforeedge.
template <typename Scalar>
PretrainBreakdown pretrain_loss(const ImageT<Scalar>& input, const ImageT<Scalar>& pred,
                                const ImageT<Scalar>& target, const SaliencyMaskT<Scalar>& m,
                                const LossWeights& w = LossWeights{}) {
  PretrainBreakdown out;
  out.l1 = static_cast<double>(l1_loss(pred, target));
  out.ssim = static_cast<double>(ssim_loss(pred, target));
  out.edge_difference = static_cast<double>(edge_difference_loss(input, pred, m));
  out.background_blur = static_cast<double>(background_blur_loss(pred, m));
  out.foreground_edge = static_cast<double>(foreground_edge_loss(pred, m));
  out.total = w.alpha * out.l1 + w.zeta * out.ssim + w.kappa * out.edge_difference +
              w.mu * out.background_blur + w.nu * out.foreground_edge;
  return out;
}

}  // namespace bokehkit
