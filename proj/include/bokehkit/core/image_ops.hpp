#pragma once

#include <algorithm>
#include <cmath>

#include "bokehkit/core/image.hpp"

namespace bokehkit {

// Rec.601 luma weights.
inline constexpr double kGrayR = 0.299;
inline constexpr double kGrayG = 0.587;
inline constexpr double kGrayB = 0.114;

/// RGB -> single-channel luma; identity for grayscale input.
template <typename Scalar>
ImageT<Scalar> to_grayscale(const ImageT<Scalar>& img) {
  if (img.channels() == 1) return img;
  PlaneT<Scalar> luma = Scalar(kGrayR) * img.plane(0) + Scalar(kGrayG) * img.plane(1) +
                        Scalar(kGrayB) * img.plane(2);
  return ImageT<Scalar>::from_plane(std::move(luma));
}

template <typename Scalar>
PlaneT<Scalar> gray_plane(const ImageT<Scalar>& img) {
  if (img.channels() == 1) return img.plane(0);
  return Scalar(kGrayR) * img.plane(0) + Scalar(kGrayG) * img.plane(1) +
         Scalar(kGrayB) * img.plane(2);
}

namespace detail {

template <typename Scalar>
PlaneT<Scalar> resize_plane_bilinear(const PlaneT<Scalar>& in, Index out_h, Index out_w) {
  const Index in_h = in.rows(), in_w = in.cols();
  PlaneT<Scalar> out(out_h, out_w);
  const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);
  for (Index i = 0; i < out_h; ++i) {
    // Half-pixel-center mapping with edge clamping.
    const double fy = std::clamp((i + 0.5) * sy - 0.5, 0.0, static_cast<double>(in_h - 1));
    const Index y0 = static_cast<Index>(fy);
    const Index y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - static_cast<double>(y0);
    for (Index j = 0; j < out_w; ++j) {
      const double fx = std::clamp((j + 0.5) * sx - 0.5, 0.0, static_cast<double>(in_w - 1));
      const Index x0 = static_cast<Index>(fx);
      const Index x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = (1.0 - wx) * in(y0, x0) + wx * in(y0, x1);
      const double bot = (1.0 - wx) * in(y1, x0) + wx * in(y1, x1);
      out(i, j) = static_cast<Scalar>((1.0 - wy) * top + wy * bot);
    }
  }
  return out;
}

}  // namespace detail

/// Bilinear resample with half-pixel-center coordinates.
template <typename Scalar>
ImageT<Scalar> resize_bilinear(const ImageT<Scalar>& img, Index out_h, Index out_w) {
  if (out_h < 1 || out_w < 1) throw ShapeError("resize target must be at least 1x1");
  std::vector<PlaneT<Scalar>> planes;
  planes.reserve(static_cast<size_t>(img.channels()));
  for (int c = 0; c < img.channels(); ++c)
    planes.push_back(detail::resize_plane_bilinear(img.plane(c), out_h, out_w));
  return ImageT<Scalar>::from_planes(std::move(planes));
}

/// Exact pixel copy of a window.
template <typename Scalar>
ImageT<Scalar> crop_rect(const ImageT<Scalar>& img, const Rect& r) {
  r.require_inside(img.height(), img.width());
  std::vector<PlaneT<Scalar>> planes;
  planes.reserve(static_cast<size_t>(img.channels()));
  for (int c = 0; c < img.channels(); ++c)
    planes.push_back(img.plane(c).block(r.top, r.left, r.height, r.width));
  return ImageT<Scalar>::from_planes(std::move(planes));
}

/// Cross-correlation (no kernel flip) of a single-channel plane with
/// replicate boundary padding; output keeps the input size.
template <typename Scalar>
PlaneT<Scalar> correlate_replicate(const PlaneT<Scalar>& in, const Kernel2DT<Scalar>& k) {
  const Index h = in.rows(), w = in.cols();
  const Index kr = k.rows(), kc = k.cols();
  const Index ry = kr / 2, rx = kc / 2;
  PlaneT<Scalar> out(h, w);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      Scalar acc = 0;
      for (Index a = 0; a < kr; ++a) {
        const Index y = std::clamp(i + a - ry, Index(0), h - 1);
        for (Index b = 0; b < kc; ++b) {
          const Index x = std::clamp(j + b - rx, Index(0), w - 1);
          acc += k.taps(a, b) * in(y, x);
        }
      }
      out(i, j) = acc;
    }
  }
  return out;
}

/// Adjoint of correlate_replicate: scatters each response back over the
/// (clamped) taps that produced it. Used by the analytic loss gradients.
template <typename Scalar>
PlaneT<Scalar> correlate_replicate_adjoint(const PlaneT<Scalar>& v, const Kernel2DT<Scalar>& k) {
  const Index h = v.rows(), w = v.cols();
  const Index kr = k.rows(), kc = k.cols();
  const Index ry = kr / 2, rx = kc / 2;
  PlaneT<Scalar> out = PlaneT<Scalar>::Zero(h, w);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      const Scalar val = v(i, j);
      if (val == Scalar(0)) continue;
      for (Index a = 0; a < kr; ++a) {
        const Index y = std::clamp(i + a - ry, Index(0), h - 1);
        for (Index b = 0; b < kc; ++b) {
          const Index x = std::clamp(j + b - rx, Index(0), w - 1);
          out(y, x) += k.taps(a, b) * val;
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
ImageT<Scalar> convolve2d(const ImageT<Scalar>& img, const Kernel2DT<Scalar>& k) {
  if (img.channels() != 1) throw ShapeError("convolve2d expects a single-channel image");
  return ImageT<Scalar>::from_plane(correlate_replicate(img.plane(0), k));
}

template <typename Scalar>
ImageT<Scalar> clamp01(const ImageT<Scalar>& img) {
  std::vector<PlaneT<Scalar>> planes;
  planes.reserve(static_cast<size_t>(img.channels()));
  for (int c = 0; c < img.channels(); ++c)
    planes.push_back(img.plane(c).min(Scalar(1)).max(Scalar(0)));
  return ImageT<Scalar>::from_planes(std::move(planes));
}

}  // namespace bokehkit
