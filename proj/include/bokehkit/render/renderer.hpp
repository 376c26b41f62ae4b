#pragma once

#include <cmath>
#include <thread>
#include <vector>

#include "bokehkit/core/image.hpp"
#include "bokehkit/loss/mask.hpp"

namespace bokehkit {

/// Per-pixel inverse depth, larger = closer to the camera.
template <typename Scalar>
struct DisparityMapT {
  PlaneT<Scalar> values;

  DisparityMapT() = default;

  explicit DisparityMapT(PlaneT<Scalar> v) : values(std::move(v)) {
    if (values.size() == 0) throw ShapeError("disparity map must be non-empty");
    if (!values.isFinite().all()) throw ValueError("disparity values must be finite");
    if ((values < Scalar(0)).any()) throw ValueError("disparity values must be >= 0");
  }

  Index height() const { return values.rows(); }
  Index width() const { return values.cols(); }
};

using DisparityMap = DisparityMapT<double>;

/// Per-pixel blur disc radius in pixels.
template <typename Scalar>
struct RadiusMapT {
  PlaneT<Scalar> values;

  RadiusMapT() = default;

  explicit RadiusMapT(PlaneT<Scalar> v) : values(std::move(v)) {
    if (values.size() == 0) throw ShapeError("radius map must be non-empty");
    if (!values.isFinite().all()) throw ValueError("radii must be finite");
    if ((values < Scalar(0)).any()) throw ValueError("radii must be >= 0");
  }

  Index height() const { return values.rows(); }
  Index width() const { return values.cols(); }
};

using RadiusMap = RadiusMapT<double>;

/// Knobs of the classical rendering pipeline. The feather is the half
/// width of the saliency ramp in normalized disparity units.
struct RenderParams {
  double max_radius = 16.0;
  double focal_disparity = 1.0;
  double mask_threshold = 0.6;
  double feather = 0.05;

  void validate() const {
    if (!(max_radius >= 0)) throw ValueError("max_radius must be >= 0");
    if (focal_disparity < 0 || focal_disparity > 1)
      throw ValueError("focal_disparity must be in [0,1]");
    if (mask_threshold < 0 || mask_threshold > 1)
      throw ValueError("mask_threshold must be in [0,1]");
    if (!(feather >= 0)) throw ValueError("feather must be >= 0");
  }
};

/// Min-max rescale to [0,1]. A constant map has no usable depth ordering
/// and is rejected; callers wanting a fallback substitute zeros.
template <typename Scalar>
DisparityMapT<Scalar> normalize_disparity(const DisparityMapT<Scalar>& d) {
  const Scalar lo = d.values.minCoeff();
  const Scalar hi = d.values.maxCoeff();
  if (hi == lo) throw ValueError("degenerate depth: disparity map is constant");
  return DisparityMapT<Scalar>(((d.values - lo) / (hi - lo)).eval());
}

/// Linear ramp from 0 at threshold-feather to 1 at threshold+feather.
/// feather 0 degenerates to a hard step with 0.5 exactly at threshold.
template <typename Scalar>
SaliencyMaskT<Scalar> saliency_from_disparity(const DisparityMapT<Scalar>& d,
                                              Scalar threshold, Scalar feather) {
  PlaneT<Scalar> m(d.height(), d.width());
  if (feather > 0) {
    m = ((d.values - (threshold - feather)) / (2 * feather)).cwiseMax(0).cwiseMin(1);
  } else {
    for (Index i = 0; i < d.height(); ++i)
      for (Index j = 0; j < d.width(); ++j) {
        const Scalar v = d.values(i, j);
        m(i, j) = v < threshold ? Scalar(0) : (v > threshold ? Scalar(1) : Scalar(0.5));
      }
  }
  return SaliencyMaskT<Scalar>(std::move(m));
}

/// Blur radius grows linearly with distance from the focal plane:
/// max_radius * |d - focal| / max(focal, 1 - focal).
template <typename Scalar>
RadiusMapT<Scalar> radius_map(const DisparityMapT<Scalar>& d, const RenderParams& p) {
  p.validate();
  const Scalar denom = std::max(Scalar(p.focal_disparity), Scalar(1) - Scalar(p.focal_disparity));
  PlaneT<Scalar> r =
      Scalar(p.max_radius) * (d.values - Scalar(p.focal_disparity)).abs() / denom;
  return RadiusMapT<Scalar>(std::move(r));
}

namespace detail {

// Horizontal half spans of the disc of integer radius R: for each |dy|,
// columns within floor(sqrt(R^2-dy^2)) belong to the disc.
inline std::vector<std::vector<Index>> disc_spans(Index max_r) {
  std::vector<std::vector<Index>> spans(static_cast<size_t>(max_r) + 1);
  for (Index r = 0; r <= max_r; ++r) {
    auto& s = spans[static_cast<size_t>(r)];
    s.resize(static_cast<size_t>(r) + 1);
    for (Index dy = 0; dy <= r; ++dy)
      s[static_cast<size_t>(dy)] =
          static_cast<Index>(std::floor(std::sqrt(double(r * r - dy * dy))));
  }
  return spans;
}

// Sum and member count of one disc row centered at (i2, j) with half
// span s, clipped to the plane. Columns accumulate as center first, then
// symmetric (left+right) pairs in increasing distance; the pair sums make
// the total bitwise invariant under horizontal mirroring.
template <typename Scalar>
inline void disc_row_sum(const PlaneT<Scalar>& v, Index i2, Index j, Index s,
                         Scalar& sum, Index& count) {
  sum = 0;
  count = 0;
  if (i2 < 0 || i2 >= v.rows()) return;
  const Index w = v.cols();
  sum = v(i2, j);
  count = 1;
  for (Index dx = 1; dx <= s; ++dx) {
    const bool left = j - dx >= 0;
    const bool right = j + dx < w;
    if (left && right) {
      sum += v(i2, j - dx) + v(i2, j + dx);
      count += 2;
    } else if (left) {
      sum += v(i2, j - dx);
      ++count;
    } else if (right) {
      sum += v(i2, j + dx);
      ++count;
    }
  }
}

template <typename Scalar>
void disc_blur_rows(const ImageT<Scalar>& img, const PlaneT<Index>& radii,
                    const std::vector<std::vector<Index>>& spans, Index row_begin,
                    Index row_end, ImageT<Scalar>& out) {
  const Index w = img.width();
  for (int c = 0; c < img.channels(); ++c) {
    const PlaneT<Scalar>& v = img.plane(c);
    PlaneT<Scalar>& o = out.plane(c);
    for (Index i = row_begin; i < row_end; ++i) {
      for (Index j = 0; j < w; ++j) {
        const Index r = radii(i, j);
        if (r == 0) {
          o(i, j) = v(i, j);
          continue;
        }
        const auto& span = spans[static_cast<size_t>(r)];
        Scalar total;
        Index count;
        disc_row_sum(v, i, j, span[0], total, count);
        for (Index dy = 1; dy <= r; ++dy) {
          Scalar above, below;
          Index ca, cb;
          disc_row_sum(v, i - dy, j, span[static_cast<size_t>(dy)], above, ca);
          disc_row_sum(v, i + dy, j, span[static_cast<size_t>(dy)], below, cb);
          // pair rows before folding in: vertical mirroring swaps the
          // operands of a commutative addition, keeping totals bitwise equal
          total += above + below;
          count += ca + cb;
        }
        o(i, j) = total / static_cast<Scalar>(count);
      }
    }
  }
}

}  // namespace detail

/// Spatially varying disc blur, gather model: each output pixel is the
/// average of input pixels within the (rounded, clipped) disc at that
/// pixel. Pure gather, so results are independent of the parallelism.
template <typename Scalar>
ImageT<Scalar> disc_blur(const ImageT<Scalar>& img, const RadiusMapT<Scalar>& radii,
                         int jobs = 1) {
  if (radii.height() != img.height() || radii.width() != img.width())
    throw ShapeError("disc_blur: radius map size differs from image");
  if (jobs < 1) throw ValueError("disc_blur: jobs must be >= 1");

  const Index h = img.height(), w = img.width();
  PlaneT<Index> rounded(h, w);
  Index max_r = 0;
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) {
      const Index r = static_cast<Index>(std::llround(radii.values(i, j)));
      rounded(i, j) = r;
      max_r = std::max(max_r, r);
    }
  const auto spans = detail::disc_spans(max_r);

  ImageT<Scalar> out(h, w, img.channels());
  const int workers = static_cast<int>(std::min<Index>(jobs, h));
  if (workers <= 1) {
    detail::disc_blur_rows(img, rounded, spans, 0, h, out);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    const Index chunk = (h + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
      const Index begin = t * chunk;
      const Index end = std::min(h, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        detail::disc_blur_rows(img, rounded, spans, begin, end, out);
      });
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

/// Mask blend: m*sharp + (1-m)*blurred. Exact at the mask endpoints.
template <typename Scalar>
ImageT<Scalar> composite_bokeh(const ImageT<Scalar>& sharp, const ImageT<Scalar>& blurred,
                               const SaliencyMaskT<Scalar>& m) {
  if (!sharp.same_shape(blurred)) throw ShapeError("composite_bokeh: image shapes differ");
  m.require_matches(sharp.height(), sharp.width());
  ImageT<Scalar> out(sharp.height(), sharp.width(), sharp.channels());
  for (int c = 0; c < sharp.channels(); ++c)
    out.plane(c) = m.values * sharp.plane(c) + (Scalar(1) - m.values) * blurred.plane(c);
  return out;
}

/// Full classical pipeline: normalize the disparity, derive the saliency
/// mask and radius field, blur, and composite the sharp foreground back.
template <typename Scalar>
ImageT<Scalar> render_bokeh(const ImageT<Scalar>& img, const DisparityMapT<Scalar>& d,
                            const RenderParams& p = RenderParams{}, int jobs = 1) {
  p.validate();
  if (d.height() != img.height() || d.width() != img.width())
    throw ShapeError("render_bokeh: disparity size differs from image");
  const DisparityMapT<Scalar> dn = normalize_disparity(d);
  const SaliencyMaskT<Scalar> m =
      saliency_from_disparity(dn, Scalar(p.mask_threshold), Scalar(p.feather));
  const RadiusMapT<Scalar> r = radius_map(dn, p);
  const ImageT<Scalar> blurred = disc_blur(img, r, jobs);
  return composite_bokeh(img, blurred, m);
}

}  // namespace bokehkit
