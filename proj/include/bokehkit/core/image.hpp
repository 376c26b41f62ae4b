#pragma once

#include <Eigen/Core>

#include <initializer_list>
#include <utility>
#include <vector>

#include "bokehkit/core/error.hpp"

namespace bokehkit {

// Row-major dense raster plane. All image math in this library runs on
// these; Eigen expressions are the intended way to combine them.
template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Plane = PlaneT<double>;
using Index = Eigen::Index;

/// Planar raster image: 1 (grayscale) or 3 (RGB) channel planes of equal
/// size, values nominally in [0,1].
template <typename Scalar>
class ImageT {
public:
  ImageT() = default;

  ImageT(Index height, Index width, int channels) {
    if (height < 1 || width < 1)
      throw ShapeError("image dimensions must be at least 1x1");
    if (channels != 1 && channels != 3)
      throw ShapeError("image must have 1 or 3 channels");
    planes_.reserve(static_cast<size_t>(channels));
    for (int c = 0; c < channels; ++c)
      planes_.push_back(PlaneT<Scalar>::Zero(height, width));
  }

  static ImageT constant(Index height, Index width, int channels, Scalar value) {
    ImageT img(height, width, channels);
    for (auto& p : img.planes_) p.setConstant(value);
    return img;
  }

  static ImageT from_planes(std::vector<PlaneT<Scalar>> planes) {
    if (planes.size() != 1 && planes.size() != 3)
      throw ShapeError("image must have 1 or 3 channels");
    const Index h = planes.front().rows();
    const Index w = planes.front().cols();
    if (h < 1 || w < 1) throw ShapeError("image dimensions must be at least 1x1");
    for (const auto& p : planes)
      if (p.rows() != h || p.cols() != w)
        throw ShapeError("image planes must share one size");
    ImageT img;
    img.planes_ = std::move(planes);
    return img;
  }

  static ImageT from_plane(PlaneT<Scalar> plane) {
    std::vector<PlaneT<Scalar>> ps;
    ps.push_back(std::move(plane));
    return from_planes(std::move(ps));
  }

  Index height() const { return planes_.empty() ? 0 : planes_.front().rows(); }
  Index width() const { return planes_.empty() ? 0 : planes_.front().cols(); }
  int channels() const { return static_cast<int>(planes_.size()); }
  Index pixel_count() const { return height() * width(); }
  Index value_count() const { return pixel_count() * channels(); }

  PlaneT<Scalar>& plane(int c) { return planes_.at(static_cast<size_t>(c)); }
  const PlaneT<Scalar>& plane(int c) const { return planes_.at(static_cast<size_t>(c)); }

  Scalar& at(int c, Index i, Index j) { return plane(c)(i, j); }
  Scalar at(int c, Index i, Index j) const { return plane(c)(i, j); }

  bool same_shape(const ImageT& other) const {
    return height() == other.height() && width() == other.width() &&
           channels() == other.channels();
  }

  bool all_finite() const {
    for (const auto& p : planes_)
      if (!p.isFinite().all()) return false;
    return true;
  }

  void require_finite(const char* what) const {
    if (!all_finite()) throw ValueError(std::string(what) + ": non-finite pixel values");
  }

private:
  std::vector<PlaneT<Scalar>> planes_;
};

using Image = ImageT<double>;

/// Odd-sized 2D filter kernel (taps applied as cross-correlation).
template <typename Scalar>
struct Kernel2DT {
  PlaneT<Scalar> taps;

  explicit Kernel2DT(PlaneT<Scalar> t) : taps(std::move(t)) {
    if (taps.rows() % 2 == 0 || taps.cols() % 2 == 0 || taps.size() == 0)
      throw ShapeError("kernel dimensions must be odd");
    if (!taps.isFinite().all()) throw ValueError("kernel taps must be finite");
  }

  static Kernel2DT from_rows(std::initializer_list<std::initializer_list<Scalar>> rows) {
    const Index r = static_cast<Index>(rows.size());
    const Index c = static_cast<Index>(rows.begin()->size());
    PlaneT<Scalar> t(r, c);
    Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Index>(row.size()) != c)
        throw ShapeError("kernel rows must have equal length");
      Index j = 0;
      for (Scalar v : row) t(i, j++) = v;
      ++i;
    }
    return Kernel2DT(std::move(t));
  }

  Index rows() const { return taps.rows(); }
  Index cols() const { return taps.cols(); }
};

using Kernel2D = Kernel2DT<double>;

/// Axis-aligned pixel window; validated against a host image on use.
struct Rect {
  Index top = 0;
  Index left = 0;
  Index height = 0;
  Index width = 0;

  void require_inside(Index img_h, Index img_w) const {
    if (top < 0 || left < 0) throw ShapeError("rect origin must be non-negative");
    if (height < 1 || width < 1) throw ShapeError("rect extent must be positive");
    if (top + height > img_h || left + width > img_w)
      throw ShapeError("rect does not fit inside the image");
  }
};

}  // namespace bokehkit
