#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "bokehkit/core/random.hpp"
#include "bokehkit/loss/gradients.hpp"

namespace bokehkit {

/// Owning bundle of everything a loss term reads, plus the point of
/// evaluation. Construction nudges pred away from the non-smooth points
/// of the term so central differences see a locally smooth function.
struct GradcheckFixture {
  ImageT<double> pred, target, input;
  SaliencyMaskT<double> mask;
  int hist_bins = kDefaultHistogramBins;
  SsimParamsT<double> ssim_params{};

  LossContextT<double> context() const {
    LossContextT<double> ctx;
    ctx.target = &target;
    ctx.input = &input;
    ctx.mask = &mask;
    ctx.hist_bins = hist_bins;
    ctx.ssim_params = ssim_params;
    return ctx;
  }
};

namespace detail {

inline SaliencyMaskT<double> random_mask(Index h, Index w, std::mt19937_64& rng,
                                         double lo, double hi) {
  return SaliencyMaskT<double>(random_plane(h, w, rng, lo, hi));
}

// Push every pred entry at least `margin` away from its target entry.
inline void separate_from_target(ImageT<double>& pred, const ImageT<double>& target,
                                 double margin) {
  for (int c = 0; c < pred.channels(); ++c) {
    for (Index i = 0; i < pred.height(); ++i) {
      for (Index j = 0; j < pred.width(); ++j) {
        const double d = pred.at(c, i, j) - target.at(c, i, j);
        if (std::abs(d) < margin)
          pred.at(c, i, j) = target.at(c, i, j) + (d >= 0 ? margin : -margin);
      }
    }
  }
}

inline double min_abs_sobel_response(const ImageT<double>& pred,
                                     const SaliencyMaskT<double>& m) {
  const PlaneT<double> gated = gray_plane(pred) * m.values;
  double lo = std::numeric_limits<double>::infinity();
  for (SobelDirection dir : kAllSobelDirections) {
    const PlaneT<double> resp = correlate_replicate(gated, sobel_kernel<double>(dir));
    lo = std::min(lo, resp.abs().minCoeff());
  }
  return lo;
}

inline double min_abs_neighbor_diff(const ImageT<double>& pred,
                                    const SaliencyMaskT<double>& m) {
  const PlaneT<double> u = gray_plane(pred) * (1.0 - m.values);
  const Index h = u.rows(), w = u.cols();
  double lo = std::numeric_limits<double>::infinity();
  if (w > 1) lo = std::min(lo, (u.rightCols(w - 1) - u.leftCols(w - 1)).abs().minCoeff());
  if (h > 1) lo = std::min(lo, (u.bottomRows(h - 1) - u.topRows(h - 1)).abs().minCoeff());
  return lo;
}

// Keep every value at least `margin` away from the half-grid lattice
// {k/(2·bins)} holding the bin centers and bin boundaries.
inline void separate_from_bin_lattice(ImageT<double>& img, int bins, double margin) {
  const double step = 1.0 / (2.0 * bins);
  for (int c = 0; c < img.channels(); ++c) {
    double* data = img.plane(c).data();
    for (Index i = 0; i < img.plane(c).size(); ++i) {
      const double nearest = std::round(data[i] / step) * step;
      const double d = data[i] - nearest;
      if (std::abs(d) < margin) data[i] = nearest + (d >= 0 ? margin : -margin);
    }
  }
}

inline bool histogram_bins_separated(const ImageT<double>& pred, const ImageT<double>& target,
                                     int bins, double tol) {
  for (int c = 0; c < 3; ++c) {
    const auto hp = soft_histogram(pred.plane(c), bins);
    const auto ht = soft_histogram(target.plane(c), bins);
    for (int b = 0; b < bins; ++b) {
      const double a = hp[static_cast<size_t>(b)], t = ht[static_cast<size_t>(b)];
      if (std::abs(a - t) < tol && (a > 1e-12 || t > 1e-12)) return false;
    }
  }
  return true;
}

}  // namespace detail

inline GradcheckFixture make_gradcheck_fixture(LossTerm term, uint64_t seed,
                                               Index h = 16, Index w = 16,
                                               double margin = 1e-3) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<uint64_t>(term) + 1);
  const int channels = (term == LossTerm::hist) ? 3 : (seed % 2 == 0 ? 1 : 3);

  GradcheckFixture f{
      random_image(h, w, channels, rng),
      random_image(h, w, channels, rng),
      random_image(h, w, channels, rng),
      detail::random_mask(h, w, rng, 0.2, 0.8),
  };

  constexpr int kMaxTries = 1000;
  switch (term) {
    case LossTerm::l1:
    case LossTerm::masked_l1_fg:
    case LossTerm::masked_l1_bg:
      detail::separate_from_target(f.pred, f.target, margin);
      break;
    case LossTerm::ssim:
      break;  // smooth everywhere
    case LossTerm::foreedge:
      for (int t = 0;; ++t) {
        if (detail::min_abs_sobel_response(f.pred, f.mask) >= margin) break;
        if (t == kMaxTries) throw ValueError("gradcheck fixture: no kink-free foreedge input");
        f.pred = random_image(h, w, channels, rng);
      }
      break;
    case LossTerm::edgediff:
      for (int t = 0;; ++t) {
        const bool edges_clear = detail::min_abs_sobel_response(f.pred, f.mask) >= margin;
        const double gap = std::abs(std::abs(foreground_edge_loss(f.pred, f.mask)) -
                                    std::abs(foreground_edge_loss(f.input, f.mask)));
        if (edges_clear && gap >= margin) break;
        if (t == kMaxTries) throw ValueError("gradcheck fixture: no kink-free edgediff input");
        f.pred = random_image(h, w, channels, rng);
      }
      break;
    case LossTerm::backblur:
      for (int t = 0;; ++t) {
        if (detail::min_abs_neighbor_diff(f.pred, f.mask) >= margin) break;
        if (t == kMaxTries) throw ValueError("gradcheck fixture: no kink-free backblur input");
        f.pred = random_image(h, w, channels, rng);
      }
      break;
    case LossTerm::hist:
      for (int t = 0;; ++t) {
        detail::separate_from_bin_lattice(f.pred, f.hist_bins, margin);
        if (detail::histogram_bins_separated(f.pred, f.target, f.hist_bins, 1e-5)) break;
        if (t == kMaxTries) throw ValueError("gradcheck fixture: no tie-free histogram input");
        f.pred = random_image(h, w, 3, rng);
        f.target = random_image(h, w, 3, rng);
      }
      break;
  }
  return f;
}

struct GradcheckOptions {
  std::vector<LossTerm> terms{kAllLossTerms.begin(), kAllLossTerms.end()};
  int seed_count = 20;
  uint64_t base_seed = 1;
  std::vector<double> eps_values{1e-5};
  double threshold = 1e-4;
  Index height = 16;
  Index width = 16;
  double kink_margin = 1e-3;
};

struct GradcheckTermResult {
  LossTerm term;
  double eps;
  double max_rel_error;
  uint64_t worst_seed;
  bool pass;
};

/// Test hook: mutates the analytic gradient before comparison. Used as a
/// negative control to prove the checker catches a wrong gradient.
using GradientCorruptor = std::function<void(LossTerm, ImageT<double>&)>;

inline std::vector<GradcheckTermResult> run_gradcheck(const GradcheckOptions& opt,
                                                      const GradientCorruptor& corrupt = {}) {
  if (opt.seed_count < 1) throw ValueError("gradcheck needs at least one seed");
  if (opt.eps_values.empty()) throw ValueError("gradcheck needs at least one eps");
  std::vector<GradcheckTermResult> results;
  for (LossTerm term : opt.terms) {
    std::vector<GradcheckTermResult> per_eps;
    per_eps.reserve(opt.eps_values.size());
    for (double eps : opt.eps_values)
      per_eps.push_back({term, eps, 0.0, 0, true});
    for (int s = 0; s < opt.seed_count; ++s) {
      const uint64_t seed = opt.base_seed + static_cast<uint64_t>(s);
      const GradcheckFixture f =
          make_gradcheck_fixture(term, seed, opt.height, opt.width, opt.kink_margin);
      const auto ctx = f.context();
      ImageT<double> analytic = loss_gradient(term, f.pred, ctx);
      if (corrupt) corrupt(term, analytic);
      for (size_t e = 0; e < opt.eps_values.size(); ++e) {
        const ImageT<double> fd =
            finite_diff_gradient(term, f.pred, ctx, opt.eps_values[e]);
        const double rel = relative_gradient_error(analytic, fd);
        if (rel > per_eps[e].max_rel_error) {
          per_eps[e].max_rel_error = rel;
          per_eps[e].worst_seed = seed;
        }
      }
    }
    for (auto& r : per_eps) {
      r.pass = r.max_rel_error <= opt.threshold;
      results.push_back(r);
    }
  }
  return results;
}

inline bool all_passed(const std::vector<GradcheckTermResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return true;
}

}  // namespace bokehkit
