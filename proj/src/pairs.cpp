#include "bokehkit/data/pairs.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bokehkit/core/error.hpp"
#include "bokehkit/core/image_ops.hpp"

namespace bokehkit {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

bool numeric_id(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                   [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::string strip_leading_zeros(const std::string& s) {
  const size_t p = s.find_first_not_of('0');
  return p == std::string::npos ? "0" : s.substr(p);
}

bool id_less(const std::string& x, const std::string& y) {
  if (numeric_id(x) && numeric_id(y)) {
    const std::string sx = strip_leading_zeros(x), sy = strip_leading_zeros(y);
    if (sx.size() != sy.size()) return sx.size() < sy.size();
    if (sx != sy) return sx < sy;
  }
  return x < y;
}

// ZNCC of the two overlap windows; false when the overlap is under 16x16 or
// either side has zero variance.
bool zncc_at(const PlaneT<double>& ga, const PlaneT<double>& gb, int dy, int dx,
             double& score) {
  const Index h = ga.rows(), w = ga.cols();
  const Index oh = h - std::abs(dy), ow = w - std::abs(dx);
  if (oh < 16 || ow < 16) return false;
  const auto va = ga.block(std::max(0, -dy), std::max(0, -dx), oh, ow);
  const auto vb = gb.block(std::max(0, dy), std::max(0, dx), oh, ow);
  const double ma = va.mean(), mb = vb.mean();
  const double var_a = (va - ma).square().sum();
  const double var_b = (vb - mb).square().sum();
  if (var_a <= 0.0 || var_b <= 0.0) return false;
  score = ((va - ma) * (vb - mb)).sum() / std::sqrt(var_a * var_b);
  return true;
}

struct OffsetBox {
  int dy0, dy1, dx0, dx1;
};

bool search_best(const PlaneT<double>& ga, const PlaneT<double>& gb, const OffsetBox& box,
                 int& best_dy, int& best_dx) {
  bool found = false;
  double best = 0.0;
  for (int dy = box.dy0; dy <= box.dy1; ++dy) {
    for (int dx = box.dx0; dx <= box.dx1; ++dx) {
      double score = 0.0;
      if (!zncc_at(ga, gb, dy, dx, score)) continue;
      bool better = !found || score > best;
      if (found && score == best) {
        const int cur = std::abs(best_dy) + std::abs(best_dx);
        const int cand = std::abs(dy) + std::abs(dx);
        better = cand < cur ||
                 (cand == cur && (dy < best_dy || (dy == best_dy && dx < best_dx)));
      }
      if (better) {
        best = score;
        best_dy = dy;
        best_dx = dx;
        found = true;
      }
    }
  }
  return found;
}

}  // namespace

void PairManifest::validate() const {
  if (split != "train" && split != "val" && split != "test")
    throw ValueError("manifest: split must be train, val, or test");
  if (search < 0) throw ValueError("manifest: search must be >= 0");
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (e.id.empty()) throw ValueError("manifest: empty id");
    if (!seen.insert(e.id).second) throw ValueError("manifest: duplicate id '" + e.id + "'");
    if (std::abs(e.dy) > search || std::abs(e.dx) > search)
      throw ValueError("manifest: offset of id '" + e.id + "' exceeds the search window");
    if (e.height < 0 || e.width < 0)
      throw ValueError("manifest: negative size for id '" + e.id + "'");
  }
}

PairManifest scan_pairs(const std::string& root) {
  if (!fs::is_directory(root)) throw IoError("scan_pairs: '" + root + "' is not a directory");
  std::map<std::string, std::pair<std::string, std::string>> files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.ends_with("_wide.png") && name.size() > 9)
      files[name.substr(0, name.size() - 9)].first = entry.path().string();
    else if (name.ends_with("_shallow.png") && name.size() > 12)
      files[name.substr(0, name.size() - 12)].second = entry.path().string();
  }
  if (files.empty())
    throw ValueError("scan_pairs: no *_wide.png / *_shallow.png files in '" + root + "'");

  std::map<std::string, std::string> normalized;
  for (const auto& [id, paths] : files) {
    const std::string key = numeric_id(id) ? strip_leading_zeros(id) : id;
    const auto [it, fresh] = normalized.emplace(key, id);
    if (!fresh)
      throw ValueError("scan_pairs: duplicate id '" + id + "' collides with '" + it->second +
                       "'");
  }

  PairManifest manifest;
  for (const auto& [id, paths] : files) {
    if (paths.first.empty())
      manifest.warnings.push_back(id + "_shallow.png has no wide counterpart");
    else if (paths.second.empty())
      manifest.warnings.push_back(id + "_wide.png has no shallow counterpart");
    else
      manifest.entries.push_back({id, paths.first, paths.second, 0, 0, 0, 0});
  }
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const PairEntry& a, const PairEntry& b) { return id_less(a.id, b.id); });
  std::sort(manifest.warnings.begin(), manifest.warnings.end());
  return manifest;
}

std::pair<int, int> estimate_translation(const Image& a, const Image& b, int search) {
  if (!a.same_shape(b)) throw ShapeError("estimate_translation: images must share a shape");
  if (search < 0) throw ValueError("estimate_translation: search must be >= 0");
  const PlaneT<double> ga = gray_plane(a);
  const PlaneT<double> gb = gray_plane(b);
  const Index h = a.height(), w = a.width();

  int dy = 0, dx = 0;
  const bool tiny = search <= 2 || std::min(h, w) < 64;
  bool refined = false;
  if (!tiny) {
    const Index qh = std::max<Index>(1, h / 4), qw = std::max<Index>(1, w / 4);
    const PlaneT<double> qa = detail::resize_plane_bilinear(ga, qh, qw);
    const PlaneT<double> qb = detail::resize_plane_bilinear(gb, qh, qw);
    const int coarse_range = (search + 3) / 4 + 1;
    int cdy = 0, cdx = 0;
    if (search_best(qa, qb, {-coarse_range, coarse_range, -coarse_range, coarse_range}, cdy,
                    cdx)) {
      // a coarse peak one cell off plus the x4 rounding remainder stays
      // within 6 full-resolution pixels
      const auto clamp_box = [&](int v) { return std::clamp(v, -search, search); };
      const OffsetBox box{clamp_box(4 * cdy - 6), clamp_box(4 * cdy + 6),
                          clamp_box(4 * cdx - 6), clamp_box(4 * cdx + 6)};
      refined = search_best(ga, gb, box, dy, dx);
    }
  }
  if (!refined && !search_best(ga, gb, {-search, search, -search, search}, dy, dx))
    throw ValueError("estimate_translation: every candidate offset was skipped");
  return {dy, dx};
}

std::pair<Image, Image> crop_to_overlap(const Image& a, const Image& b, int dy, int dx) {
  if (!a.same_shape(b)) throw ShapeError("crop_to_overlap: images must share a shape");
  const Index h = a.height(), w = a.width();
  if (std::abs(dy) >= h || std::abs(dx) >= w)
    throw ValueError("crop_to_overlap: offset leaves no overlap");
  const Index oh = h - std::abs(dy), ow = w - std::abs(dx);
  const Rect ra{std::max<Index>(0, -dy), std::max<Index>(0, -dx), oh, ow};
  const Rect rb{std::max<Index>(0, dy), std::max<Index>(0, dx), oh, ow};
  return {crop_rect(a, ra), crop_rect(b, rb)};
}

Image downscale_to_height(const Image& img, Index target_h) {
  if (target_h < 1) throw ValueError("downscale_to_height: target height must be >= 1");
  const double scale = static_cast<double>(target_h) / static_cast<double>(img.height());
  const Index target_w =
      std::max<Index>(1, std::llround(static_cast<double>(img.width()) * scale));
  return resize_bilinear(img, target_h, target_w);
}

PrepResult prep_pair(const Image& wide, const Image& shallow, int search, Index target_h) {
  const auto [dy, dx] = estimate_translation(wide, shallow, search);
  auto [cw, cs] = crop_to_overlap(wide, shallow, dy, dx);
  return {dy, dx, downscale_to_height(cw, target_h), downscale_to_height(cs, target_h)};
}

std::string manifest_to_json(const PairManifest& manifest) {
  manifest.validate();
  json j;
  j["split"] = manifest.split;
  j["search"] = manifest.search;
  j["entries"] = json::array();
  for (const auto& e : manifest.entries)
    j["entries"].push_back({{"id", e.id},
                            {"wide", e.wide_path},
                            {"shallow", e.shallow_path},
                            {"dy", e.dy},
                            {"dx", e.dx},
                            {"height", e.height},
                            {"width", e.width}});
  j["warnings"] = manifest.warnings;
  return j.dump(2) + "\n";
}

PairManifest manifest_from_json(const std::string& text) {
  PairManifest manifest;
  try {
    const json j = json::parse(text);
    manifest.split = j.at("split").get<std::string>();
    manifest.search = j.at("search").get<int>();
    for (const auto& je : j.at("entries")) {
      PairEntry e;
      e.id = je.at("id").get<std::string>();
      e.wide_path = je.at("wide").get<std::string>();
      e.shallow_path = je.at("shallow").get<std::string>();
      e.dy = je.at("dy").get<int>();
      e.dx = je.at("dx").get<int>();
      e.height = je.at("height").get<Index>();
      e.width = je.at("width").get<Index>();
      manifest.entries.push_back(std::move(e));
    }
    if (j.contains("warnings"))
      manifest.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: invalid JSON: ") + e.what());
  }
  manifest.validate();
  return manifest;
}

void save_manifest(const PairManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_manifest: cannot open '" + path + "' for writing");
  out << manifest_to_json(manifest);
  out.flush();
  if (!out) throw IoError("save_manifest: write failed for '" + path + "'");
}

PairManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_manifest: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return manifest_from_json(buf.str());
}

}  // namespace bokehkit
