#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "bokehkit/core/error.hpp"
#include "bokehkit/core/image_ops.hpp"
#include "bokehkit/core/random.hpp"
#include "bokehkit/net/tensor.hpp"

namespace bokehkit {

struct NetSpec {
  int levels = 3;
  int base_channels = 16;
  bool skip_connections = true;
  double leaky_slope = 0.2;

  void validate() const {
    if (levels < 1) throw ValueError("net spec: levels must be >= 1");
    if (base_channels < 1) throw ValueError("net spec: base_channels must be >= 1");
    if (leaky_slope < 0.0 || leaky_slope >= 1.0)
      throw ValueError("net spec: leaky_slope must be in [0, 1)");
  }
};

// One conv in the expanded graph. `upscale` marks a pixel_shuffle(2) after
// the conv, `activated` a leaky ReLU between the two.
struct LayerSpec {
  std::string name;
  Index in_channels = 0;
  Index out_channels = 0;
  int stride = 1;
  bool activated = true;
  bool upscale = false;
};

// Encoder convs halve resolution and double width per level; the decoder
// mirrors them with stride-1 convs feeding pixel_shuffle(2). Skips
// concatenate the encoder feature at the decoder conv's input resolution.
// The last decoder conv has no activation; levels=1 degenerates to a single
// unactivated conv at full resolution.
inline std::vector<LayerSpec> expand_layers(const NetSpec& spec, Index img_channels) {
  spec.validate();
  if (img_channels < 1) throw ShapeError("expand_layers: img_channels must be >= 1");
  const Index levels = spec.levels;
  const auto width = [&](Index l) { return static_cast<Index>(spec.base_channels) << l; };
  std::vector<LayerSpec> layers;
  if (levels == 1) {
    layers.push_back({"mid", img_channels, img_channels, 1, false, false});
    return layers;
  }
  for (Index l = 0; l + 1 < levels; ++l)
    layers.push_back({"enc" + std::to_string(l), l == 0 ? img_channels : width(l - 1),
                      width(l), 2, true, false});
  layers.push_back({"mid", width(levels - 2), width(levels - 2), 1, true, false});
  for (Index l = levels - 2; l >= 0; --l) {
    const Index in = spec.skip_connections ? 2 * width(l) : width(l);
    const Index target = (l >= 1) ? width(l - 1) : img_channels;
    layers.push_back({"dec" + std::to_string(l), in, 4 * target, 1, l >= 1, true});
  }
  return layers;
}

// 3x3 cross-correlation with replicate padding 1. Output is ceil(h/stride).
// Weights [out, in, 3, 3] and bias [out] carry the container's float32
// payload; arithmetic runs in double. Each output element accumulates in a
// fixed order, so the result is independent of `jobs`.
inline Tensor conv_layer(const Tensor& x, const NamedTensor& w, const NamedTensor& b,
                         int stride, int jobs = 1) {
  if (stride != 1 && stride != 2) throw ValueError("conv_layer: stride must be 1 or 2");
  if (jobs < 1) throw ValueError("conv_layer: jobs must be >= 1");
  if (w.dims.size() != 4 || w.dims[2] != 3 || w.dims[3] != 3)
    throw ShapeError("conv_layer: weight must have shape [out, in, 3, 3]");
  const Index out_c = static_cast<Index>(w.dims[0]);
  const Index in_c = static_cast<Index>(w.dims[1]);
  if (in_c != x.channels) throw ShapeError("conv_layer: input channel mismatch");
  if (b.dims.size() != 1 || static_cast<Index>(b.dims[0]) != out_c)
    throw ShapeError("conv_layer: bias must have shape [out]");

  const Index h = x.height, wd = x.width;
  const Index oh = (h + stride - 1) / stride;
  const Index ow = (wd + stride - 1) / stride;
  Tensor out(out_c, oh, ow);

  const auto compute_rows = [&](Index r0, Index r1) {
    for (Index r = r0; r < r1; ++r) {
      const Index oc = r / oh, oi = r % oh;
      for (Index oj = 0; oj < ow; ++oj) {
        double acc = static_cast<double>(b.data[static_cast<size_t>(oc)]);
        for (Index ic = 0; ic < in_c; ++ic) {
          const float* taps = &w.data[static_cast<size_t>(((oc * in_c + ic) * 3) * 3)];
          for (int ki = 0; ki < 3; ++ki) {
            const Index yi = std::clamp<Index>(oi * stride + ki - 1, 0, h - 1);
            for (int kj = 0; kj < 3; ++kj) {
              const Index xj = std::clamp<Index>(oj * stride + kj - 1, 0, wd - 1);
              acc += static_cast<double>(taps[ki * 3 + kj]) * x.at(ic, yi, xj);
            }
          }
        }
        out.at(oc, oi, oj) = acc;
      }
    }
  };

  const Index total_rows = out_c * oh;
  const Index workers = std::min<Index>(jobs, total_rows);
  if (workers <= 1) {
    compute_rows(0, total_rows);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (Index t = 0; t < workers; ++t) {
      const Index r0 = total_rows * t / workers;
      const Index r1 = total_rows * (t + 1) / workers;
      pool.emplace_back(compute_rows, r0, r1);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

inline void leaky_relu_inplace(Tensor& x, double slope) {
  for (double& v : x.data)
    if (v < 0.0) v *= slope;
}

inline Tensor leaky_relu(Tensor x, double slope) {
  leaky_relu_inplace(x, slope);
  return x;
}

// (c, h, w) -> (c/r^2, h*r, w*r); channel block k*r^2 .. k*r^2+r^2-1 fills
// output channel k in row-major sub-pixel order.
inline Tensor pixel_shuffle(const Tensor& x, int r) {
  if (r < 1) throw ValueError("pixel_shuffle: factor must be >= 1");
  const Index rr = static_cast<Index>(r) * r;
  if (x.channels % rr != 0)
    throw ShapeError("pixel_shuffle: channel count not divisible by r^2");
  Tensor out(x.channels / rr, x.height * r, x.width * r);
  for (Index k = 0; k < out.channels; ++k)
    for (Index i = 0; i < x.height; ++i)
      for (Index j = 0; j < x.width; ++j)
        for (Index di = 0; di < r; ++di)
          for (Index dj = 0; dj < r; ++dj)
            out.at(k, i * r + di, j * r + dj) = x.at(k * rr + di * r + dj, i, j);
  return out;
}

inline Tensor space_to_depth(const Tensor& x, int r) {
  if (r < 1) throw ValueError("space_to_depth: factor must be >= 1");
  if (x.height % r != 0 || x.width % r != 0)
    throw ShapeError("space_to_depth: spatial size not divisible by r");
  const Index rr = static_cast<Index>(r) * r;
  Tensor out(x.channels * rr, x.height / r, x.width / r);
  for (Index k = 0; k < x.channels; ++k)
    for (Index i = 0; i < out.height; ++i)
      for (Index j = 0; j < out.width; ++j)
        for (Index di = 0; di < r; ++di)
          for (Index dj = 0; dj < r; ++dj)
            out.at(k * rr + di * r + dj, i, j) = x.at(k, i * r + di, j * r + dj);
  return out;
}

inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.height != b.height || a.width != b.width)
    throw ShapeError("concat_channels: spatial size mismatch");
  Tensor out(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(),
            out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  return out;
}

namespace detail {

inline const NamedTensor& fetch_tensor(const WeightStore& store, const std::string& name,
                                       const std::vector<uint32_t>& dims) {
  const auto it = store.find(name);
  if (it == store.end()) throw ShapeError("weights: missing tensor '" + name + "'");
  if (it->second.dims != dims) {
    std::string msg = "weights: tensor '" + name + "' has wrong shape [";
    for (size_t i = 0; i < it->second.dims.size(); ++i)
      msg += (i ? "," : "") + std::to_string(it->second.dims[i]);
    msg += "], expected [";
    for (size_t i = 0; i < dims.size(); ++i) msg += (i ? "," : "") + std::to_string(dims[i]);
    msg += "]";
    throw ShapeError(msg);
  }
  return it->second;
}

}  // namespace detail

inline Image unet_forward(const Image& img, const WeightStore& store, const NetSpec& spec,
                          int jobs = 1) {
  spec.validate();
  if (jobs < 1) throw ValueError("unet_forward: jobs must be >= 1");
  const Index divisor = Index(1) << (spec.levels - 1);
  if (img.height() % divisor != 0 || img.width() % divisor != 0)
    throw ShapeError("unet_forward: input size must be divisible by " +
                     std::to_string(divisor));

  const auto layers = expand_layers(spec, img.channels());
  const auto weight_of = [&](const LayerSpec& l) -> const NamedTensor& {
    return detail::fetch_tensor(store, l.name + ".weight",
                                {static_cast<uint32_t>(l.out_channels),
                                 static_cast<uint32_t>(l.in_channels), 3, 3});
  };
  const auto bias_of = [&](const LayerSpec& l) -> const NamedTensor& {
    return detail::fetch_tensor(store, l.name + ".bias",
                                {static_cast<uint32_t>(l.out_channels)});
  };

  Tensor x = tensor_from_image(img);
  std::vector<Tensor> enc_feats;
  size_t li = 0;
  for (Index l = 0; l + 1 < spec.levels; ++l, ++li) {
    x = conv_layer(x, weight_of(layers[li]), bias_of(layers[li]), 2, jobs);
    leaky_relu_inplace(x, spec.leaky_slope);
    enc_feats.push_back(x);
  }
  x = conv_layer(x, weight_of(layers[li]), bias_of(layers[li]), 1, jobs);
  if (layers[li].activated) leaky_relu_inplace(x, spec.leaky_slope);
  ++li;
  for (Index l = spec.levels - 2; l >= 0; --l, ++li) {
    if (spec.skip_connections) x = concat_channels(x, enc_feats[static_cast<size_t>(l)]);
    x = conv_layer(x, weight_of(layers[li]), bias_of(layers[li]), 1, jobs);
    if (layers[li].activated) leaky_relu_inplace(x, spec.leaky_slope);
    x = pixel_shuffle(x, 2);
  }
  return clamp01(image_from_tensor(x));
}

// Uniform(-s, s) with s = sqrt(1/fan_in), fan_in = in_channels * 9. Values
// are drawn in double and kept only if they stay strictly inside the bound
// after the cast to float32.
inline WeightStore random_weights(const NetSpec& spec, uint64_t seed, Index img_channels = 3) {
  std::mt19937_64 rng(seed);
  WeightStore store;
  for (const auto& l : expand_layers(spec, img_channels)) {
    const double s = std::sqrt(1.0 / (static_cast<double>(l.in_channels) * 9.0));
    const auto draw = [&]() -> float {
      for (;;) {
        const double v = (2.0 * canonical_uniform(rng) - 1.0) * s;
        const float f = static_cast<float>(v);
        if (std::abs(static_cast<double>(f)) < s) return f;
      }
    };
    NamedTensor w;
    w.dims = {static_cast<uint32_t>(l.out_channels), static_cast<uint32_t>(l.in_channels), 3, 3};
    w.data.resize(w.value_count());
    for (float& v : w.data) v = draw();
    NamedTensor b;
    b.dims = {static_cast<uint32_t>(l.out_channels)};
    b.data.resize(b.value_count());
    for (float& v : b.data) v = draw();
    store.emplace(l.name + ".weight", std::move(w));
    store.emplace(l.name + ".bias", std::move(b));
  }
  return store;
}

// Analytic count: 2 flops per conv multiply-accumulate, 1 per bias add,
// 1 per activated element. For sizes divisible by 2^(levels-1), doubling
// both dimensions scales every term by exactly 4.
inline uint64_t flop_count(const NetSpec& spec, Index h, Index w, Index img_channels = 3) {
  spec.validate();
  if (h < 1 || w < 1) throw ShapeError("flop_count: size must be positive");
  uint64_t total = 0;
  Index ch = h, cw = w;
  for (const auto& l : expand_layers(spec, img_channels)) {
    const Index oh = (ch + l.stride - 1) / l.stride;
    const Index ow = (cw + l.stride - 1) / l.stride;
    const uint64_t cells = static_cast<uint64_t>(oh) * static_cast<uint64_t>(ow) *
                           static_cast<uint64_t>(l.out_channels);
    total += cells * static_cast<uint64_t>(2 * l.in_channels * 9);
    total += cells;
    if (l.activated) total += cells;
    ch = oh;
    cw = ow;
    if (l.upscale) {
      ch *= 2;
      cw *= 2;
    }
  }
  return total;
}

}  // namespace bokehkit
