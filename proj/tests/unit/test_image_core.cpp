#include <doctest.h>

#include <limits>
#include <random>

#include "bokehkit/core/image.hpp"
#include "bokehkit/core/image_ops.hpp"
#include "bokehkit/core/random.hpp"

using namespace bokehkit;

namespace {

Image counting_image(Index h, Index w) {
  Image img(h, w, 1);
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) img.at(0, i, j) = static_cast<double>(i * w + j);
  return img;
}

// Three-column vertical step used by the edge-loss fixtures: columns 0,0,1.
Image vertical_step3() {
  Image img = Image::constant(3, 3, 1, 0.0);
  for (Index i = 0; i < 3; ++i) img.at(0, i, 2) = 1.0;
  return img;
}

}  // namespace

TEST_CASE("image shape invariants") {
  CHECK_THROWS_AS(Image(0, 4, 1), ShapeError);
  CHECK_THROWS_AS(Image(4, 0, 1), ShapeError);
  CHECK_THROWS_AS(Image(4, 4, 2), ShapeError);
  CHECK_THROWS_AS(Image(4, 4, 0), ShapeError);

  Image img(5, 7, 3);
  CHECK(img.height() == 5);
  CHECK(img.width() == 7);
  CHECK(img.channels() == 3);
  CHECK(img.pixel_count() == 35);
  CHECK(img.value_count() == 105);
}

TEST_CASE("finite-value enforcement") {
  Image img = Image::constant(2, 2, 1, 0.5);
  CHECK(img.all_finite());
  img.at(0, 1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(img.all_finite());
  CHECK_THROWS_AS(img.require_finite("test image"), ValueError);
}

TEST_CASE("grayscale weights") {
  Image rgb(1, 1, 3);
  rgb.at(0, 0, 0) = 1.0;
  rgb.at(1, 0, 0) = 1.0;
  rgb.at(2, 0, 0) = 1.0;
  CHECK(to_grayscale(rgb).at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  rgb.at(1, 0, 0) = 0.0;
  rgb.at(2, 0, 0) = 0.0;
  CHECK(to_grayscale(rgb).at(0, 0, 0) == doctest::Approx(0.299).epsilon(1e-12));

  Image gray = Image::constant(3, 3, 1, 0.42);
  Image back = to_grayscale(gray);
  CHECK(back.channels() == 1);
  CHECK(back.at(0, 1, 1) == 0.42);
}

TEST_CASE("bilinear resize: identity and constants") {
  std::mt19937_64 rng(11);
  const Image img = random_image(9, 13, 3, rng);
  const Image same = resize_bilinear(img, 9, 13);
  for (int c = 0; c < 3; ++c) CHECK((same.plane(c) - img.plane(c)).abs().maxCoeff() < 1e-12);

  const Image flat = Image::constant(8, 8, 1, 0.37);
  for (auto [h, w] : {std::pair<Index, Index>{3, 17}, {16, 16}, {1, 1}}) {
    const Image r = resize_bilinear(flat, h, w);
    CHECK(r.plane(0).minCoeff() == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(r.plane(0).maxCoeff() == doctest::Approx(0.37).epsilon(1e-12));
  }
}

TEST_CASE("bilinear resize: half-pixel-center hand fixture") {
  Image img(1, 2, 1);
  img.at(0, 0, 0) = 0.0;
  img.at(0, 0, 1) = 1.0;
  const Image up = resize_bilinear(img, 1, 4);
  const double expected[4] = {0.0, 0.25, 0.75, 1.0};
  for (Index j = 0; j < 4; ++j)
    CHECK(up.at(0, 0, j) == doctest::Approx(expected[j]).epsilon(1e-12));
}

TEST_CASE("crop_rect") {
  const Image img = counting_image(4, 5);

  const Image full = crop_rect(img, Rect{0, 0, 4, 5});
  CHECK((full.plane(0) - img.plane(0)).abs().maxCoeff() == 0.0);

  const Image corner = crop_rect(img, Rect{0, 0, 1, 1});
  CHECK(corner.at(0, 0, 0) == 0.0);

  const Image window = crop_rect(img, Rect{1, 2, 2, 2});
  CHECK(window.at(0, 0, 0) == 7.0);
  CHECK(window.at(0, 0, 1) == 8.0);
  CHECK(window.at(0, 1, 0) == 12.0);
  CHECK(window.at(0, 1, 1) == 13.0);

  CHECK_THROWS_AS(crop_rect(img, Rect{2, 2, 3, 2}), ShapeError);
  CHECK_THROWS_AS(crop_rect(img, Rect{0, 0, 0, 2}), ShapeError);

  // crop composes: r2 of crop(r1) equals the composed rect directly
  const Image a = crop_rect(crop_rect(img, Rect{1, 1, 3, 4}), Rect{1, 2, 2, 2});
  const Image b = crop_rect(img, Rect{2, 3, 2, 2});
  CHECK((a.plane(0) - b.plane(0)).abs().maxCoeff() == 0.0);
}

TEST_CASE("convolve2d: identity, zero-sum, hand fixture") {
  const auto identity = Kernel2D::from_rows({{0, 0, 0}, {0, 1, 0}, {0, 0, 0}});
  std::mt19937_64 rng(3);
  const Image img = random_image(6, 6, 1, rng);
  const Image out = convolve2d(img, identity);
  CHECK((out.plane(0) - img.plane(0)).abs().maxCoeff() < 1e-15);

  const auto sobel_x = Kernel2D::from_rows({{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}});
  const Image flat = Image::constant(5, 5, 1, 0.8);
  CHECK(convolve2d(flat, sobel_x).plane(0).abs().maxCoeff() == 0.0);

  // vertical step, replicate padding: every row comes out [0, 4, 4]
  const Image step = vertical_step3();
  const Image resp = convolve2d(step, sobel_x);
  for (Index i = 0; i < 3; ++i) {
    CHECK(resp.at(0, i, 0) == doctest::Approx(0.0));
    CHECK(resp.at(0, i, 1) == doctest::Approx(4.0));
    CHECK(resp.at(0, i, 2) == doctest::Approx(4.0));
  }

  const Image rgb(4, 4, 3);
  CHECK_THROWS_AS(convolve2d(rgb, sobel_x), ShapeError);
}

TEST_CASE("convolve2d linearity") {
  std::mt19937_64 rng(17);
  const Image x = random_image(16, 16, 1, rng);
  const Image y = random_image(16, 16, 1, rng);
  const auto k = Kernel2D::from_rows({{0.5, -1, 0.25}, {2, 0, -0.75}, {1, -2, 0.5}});
  const double a = 1.7, b = -0.6;

  Image mix(16, 16, 1);
  mix.plane(0) = a * x.plane(0) + b * y.plane(0);
  const PlaneT<double> lhs = convolve2d(mix, k).plane(0);
  const PlaneT<double> rhs =
      a * convolve2d(x, k).plane(0) + b * convolve2d(y, k).plane(0);
  CHECK((lhs - rhs).abs().maxCoeff() < 1e-12);
}

TEST_CASE("correlate_replicate_adjoint is the true adjoint") {
  std::mt19937_64 rng(23);
  const auto k = Kernel2D::from_rows({{1, -2, 0}, {0.5, 3, -1}, {2, 0, -0.25}});
  for (int trial = 0; trial < 5; ++trial) {
    const PlaneT<double> u = random_plane(12, 14, rng, -1.0, 1.0);
    const PlaneT<double> v = random_plane(12, 14, rng, -1.0, 1.0);
    const double lhs = (correlate_replicate(u, k) * v).sum();
    const double rhs = (u * correlate_replicate_adjoint(v, k)).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("kernel validation") {
  CHECK_THROWS_AS(Kernel2D::from_rows({{1, 2}, {3, 4}}), ShapeError);
  CHECK_THROWS_AS(Kernel2D::from_rows({{1, 2, 3}, {4, 5}, {6, 7, 8}}), ShapeError);
}

TEST_CASE("clamp01") {
  Image img(1, 3, 1);
  img.at(0, 0, 0) = -0.5;
  img.at(0, 0, 1) = 0.25;
  img.at(0, 0, 2) = 1.5;
  const Image c = clamp01(img);
  CHECK(c.at(0, 0, 0) == 0.0);
  CHECK(c.at(0, 0, 1) == 0.25);
  CHECK(c.at(0, 0, 2) == 1.0);
}
