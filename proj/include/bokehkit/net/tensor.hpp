#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "bokehkit/core/error.hpp"
#include "bokehkit/core/image.hpp"

namespace bokehkit {

// Planar feature map: data laid out channel-major, each plane row-major.
template <typename Scalar>
struct TensorT {
  Index channels = 0;
  Index height = 0;
  Index width = 0;
  std::vector<Scalar> data;

  TensorT() = default;
  TensorT(Index c, Index h, Index w)
      : channels(c), height(h), width(w) {
    if (c < 1 || h < 1 || w < 1) throw ShapeError("tensor: dimensions must be positive");
    data.assign(static_cast<size_t>(c * h * w), Scalar(0));
  }

  Scalar& at(Index c, Index i, Index j) {
    return data[static_cast<size_t>((c * height + i) * width + j)];
  }
  Scalar at(Index c, Index i, Index j) const {
    return data[static_cast<size_t>((c * height + i) * width + j)];
  }

  void require_finite(const char* what) const {
    for (Scalar v : data)
      if (!std::isfinite(static_cast<double>(v)))
        throw ValueError(std::string(what) + ": non-finite value");
  }
};

using Tensor = TensorT<double>;

// Container-level tensor of arbitrary rank, float32 payload to match the
// on-disk weight format exactly.
struct NamedTensor {
  std::vector<uint32_t> dims;
  std::vector<float> data;

  uint64_t value_count() const {
    uint64_t n = 1;
    for (uint32_t d : dims) n *= d;
    return n;
  }

  bool operator==(const NamedTensor& other) const {
    return dims == other.dims && data == other.data;
  }
};

using WeightStore = std::map<std::string, NamedTensor>;

inline Tensor tensor_from_image(const Image& img) {
  Tensor t(img.channels(), img.height(), img.width());
  for (int c = 0; c < img.channels(); ++c)
    for (Index i = 0; i < img.height(); ++i)
      for (Index j = 0; j < img.width(); ++j) t.at(c, i, j) = img.at(c, i, j);
  return t;
}

inline Image image_from_tensor(const Tensor& t) {
  if (t.channels != 1 && t.channels != 3)
    throw ShapeError("image_from_tensor: channel count must be 1 or 3");
  Image img(t.height, t.width, static_cast<int>(t.channels));
  for (int c = 0; c < img.channels(); ++c)
    for (Index i = 0; i < t.height; ++i)
      for (Index j = 0; j < t.width; ++j) img.at(c, i, j) = t.at(c, i, j);
  return img;
}

}  // namespace bokehkit
