#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bokehkit/core/image.hpp"

namespace bokehkit {

struct PairEntry {
  std::string id;
  std::string wide_path;
  std::string shallow_path;
  int dy = 0;
  int dx = 0;
  Index height = 0;  // final size after prep, 0 before
  Index width = 0;

  bool operator==(const PairEntry&) const = default;
};

struct PairManifest {
  std::string split = "train";
  int search = 0;
  std::vector<PairEntry> entries;
  std::vector<std::string> warnings;

  void validate() const;
  bool operator==(const PairManifest&) const = default;
};

// Discovers <id>_wide.png / <id>_shallow.png pairs, sorted by id
// (numerically when both ids are numbers). Unpaired files land in the
// manifest's warnings.
PairManifest scan_pairs(const std::string& root);

// Integer offset in [-search, search]^2 maximizing zero-normalized
// cross-correlation over the overlap, with b(i+dy, j+dx) matching a(i, j).
// Searches a quarter-resolution grid first, then refines at full
// resolution. Offsets whose overlap is smaller than 16x16 or has zero
// variance are skipped; ties break toward smaller |dy|+|dx|, then
// lexicographically.
std::pair<int, int> estimate_translation(const Image& a, const Image& b, int search);

// Crops both images to the region they share under the offset; outputs have
// size (h-|dy|) x (w-|dx|).
std::pair<Image, Image> crop_to_overlap(const Image& a, const Image& b, int dy, int dx);

// Bilinear resize to (target_h, round(w * target_h / h)).
Image downscale_to_height(const Image& img, Index target_h);

struct PrepResult {
  int dy = 0;
  int dx = 0;
  Image wide;
  Image shallow;
};

// align + crop + downscale for one pair
PrepResult prep_pair(const Image& wide, const Image& shallow, int search, Index target_h);

std::string manifest_to_json(const PairManifest& manifest);
PairManifest manifest_from_json(const std::string& text);
void save_manifest(const PairManifest& manifest, const std::string& path);
PairManifest load_manifest(const std::string& path);

}  // namespace bokehkit
