#pragma once

#include <utility>

#include "bokehkit/core/image.hpp"

namespace bokehkit {

/// Grayscale foreground/background separator in [0,1]; 1 = foreground.
/// Values are clamped into range on construction.
template <typename Scalar>
struct SaliencyMaskT {
  PlaneT<Scalar> values;

  SaliencyMaskT() = default;

  explicit SaliencyMaskT(PlaneT<Scalar> v) : values(std::move(v)) {
    if (values.rows() < 1 || values.cols() < 1)
      throw ShapeError("saliency mask must be at least 1x1");
    if (!values.isFinite().all()) throw ValueError("saliency mask values must be finite");
    values = values.min(Scalar(1)).max(Scalar(0));
  }

  static SaliencyMaskT constant(Index h, Index w, Scalar v) {
    return SaliencyMaskT(PlaneT<Scalar>::Constant(h, w, v));
  }

  Index height() const { return values.rows(); }
  Index width() const { return values.cols(); }

  void require_matches(Index h, Index w) const {
    if (height() != h || width() != w)
      throw ShapeError("saliency mask size does not match the image");
  }
};

using SaliencyMask = SaliencyMaskT<double>;

}  // namespace bokehkit
