#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "bokehkit/core/image_ops.hpp"
#include "bokehkit/core/random.hpp"
#include "bokehkit/data/pairs.hpp"
#include "bokehkit/metrics/metrics.hpp"

using namespace bokehkit;
namespace fs = std::filesystem;

namespace {

Image smoothed_noise(Index h, Index w, int channels, uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Kernel2D box(PlaneT<double>::Constant(5, 5, 1.0 / 25.0));
  Image img(h, w, channels);
  for (int c = 0; c < channels; ++c)
    img.plane(c) = correlate_replicate(correlate_replicate(random_plane(h, w, rng), box), box);
  return img;
}

Image shift_replicate(const Image& src, int sy, int sx) {
  const Index h = src.height(), w = src.width();
  Image out(h, w, src.channels());
  for (int c = 0; c < src.channels(); ++c)
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j)
        out.at(c, i, j) = src.at(c, std::clamp<Index>(i - sy, 0, h - 1),
                                 std::clamp<Index>(j - sx, 0, w - 1));
  return out;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& stem) : path(fs::temp_directory_path() / stem) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  void touch(const std::string& name) const {
    std::ofstream out(path / name);
    out << "x";
  }
};

}  // namespace

TEST_CASE("scan_pairs pairs files and reports strays") {
  TempDir dir("bokehkit_scan_basic");
  dir.touch("3_wide.png");
  dir.touch("3_shallow.png");
  dir.touch("7_wide.png");
  dir.touch("readme.txt");

  const PairManifest m = scan_pairs(dir.path.string());
  REQUIRE(m.entries.size() == 1);
  CHECK(m.entries[0].id == "3");
  CHECK(m.entries[0].wide_path.find("3_wide.png") != std::string::npos);
  CHECK(m.entries[0].shallow_path.find("3_shallow.png") != std::string::npos);
  REQUIRE(m.warnings.size() == 1);
  CHECK(m.warnings[0].find("7_wide") != std::string::npos);
}

TEST_CASE("scan_pairs sorts ids numerically") {
  TempDir dir("bokehkit_scan_order");
  for (const char* id : {"2", "10", "1"}) {
    dir.touch(std::string(id) + "_wide.png");
    dir.touch(std::string(id) + "_shallow.png");
  }
  const PairManifest m = scan_pairs(dir.path.string());
  REQUIRE(m.entries.size() == 3);
  CHECK(m.entries[0].id == "1");
  CHECK(m.entries[1].id == "2");
  CHECK(m.entries[2].id == "10");

  TempDir big("bokehkit_scan_hundred");
  std::vector<int> ids(100);
  for (int i = 0; i < 100; ++i) ids[static_cast<size_t>(i)] = i;
  std::mt19937_64 rng(4);
  std::shuffle(ids.begin(), ids.end(), rng);
  for (int id : ids) {
    big.touch(std::to_string(id) + "_wide.png");
    big.touch(std::to_string(id) + "_shallow.png");
  }
  const PairManifest hundred = scan_pairs(big.path.string());
  REQUIRE(hundred.entries.size() == 100);
  CHECK(hundred.warnings.empty());
  for (int i = 0; i < 100; ++i)
    CHECK(hundred.entries[static_cast<size_t>(i)].id == std::to_string(i));
}

TEST_CASE("scan_pairs error cases") {
  TempDir empty("bokehkit_scan_empty");
  empty.touch("notes.md");
  CHECK_THROWS_AS(scan_pairs(empty.path.string()), ValueError);
  CHECK_THROWS_AS(scan_pairs((empty.path / "missing").string()), IoError);

  TempDir dup("bokehkit_scan_dup");
  dup.touch("3_wide.png");
  dup.touch("3_shallow.png");
  dup.touch("03_wide.png");
  dup.touch("03_shallow.png");
  CHECK_THROWS_AS(scan_pairs(dup.path.string()), ValueError);
}

TEST_CASE("estimate_translation fixtures") {
  const Image a = smoothed_noise(80, 80, 1, 21);
  CHECK(estimate_translation(a, a, 5) == std::pair<int, int>{0, 0});
  CHECK(estimate_translation(a, a, 0) == std::pair<int, int>{0, 0});

  const Image big = smoothed_noise(128, 128, 1, 22);
  const Image shifted = shift_replicate(big, 3, 7);
  CHECK(estimate_translation(big, shifted, 10) == std::pair<int, int>{3, 7});
  CHECK(estimate_translation(shifted, big, 10) == std::pair<int, int>{-3, -7});

  // small images skip the coarse pass entirely
  const Image small = smoothed_noise(48, 48, 1, 23);
  CHECK(estimate_translation(small, shift_replicate(small, 2, -1), 4) ==
        std::pair<int, int>{2, -1});

  CHECK_THROWS_AS(estimate_translation(Image::constant(64, 64, 1, 0.5),
                                       Image::constant(64, 64, 1, 0.5), 3),
                  ValueError);
  CHECK_THROWS_AS(estimate_translation(a, Image::constant(64, 64, 1, 0.5), 3), ShapeError);
  CHECK_THROWS_AS(estimate_translation(a, a, -1), ValueError);
}

TEST_CASE("estimate_translation recovers 100 random shifts exactly") {
  std::mt19937_64 rng(31);
  int recovered = 0;
  for (int k = 0; k < 100; ++k) {
    const Image tex = smoothed_noise(128, 128, 1, 1000 + static_cast<uint64_t>(k));
    const int sy = static_cast<int>(rng() % 21) - 10;
    const int sx = static_cast<int>(rng() % 21) - 10;
    const auto [dy, dx] = estimate_translation(tex, shift_replicate(tex, sy, sx), 10);
    if (dy == sy && dx == sx) ++recovered;
  }
  CHECK(recovered == 100);
}

TEST_CASE("crop_to_overlap geometry and content") {
  const Image a = smoothed_noise(100, 200, 1, 41);
  const Image b = smoothed_noise(100, 200, 1, 42);

  const auto [a0, b0] = crop_to_overlap(a, b, 0, 0);
  CHECK((a0.plane(0) - a.plane(0)).abs().maxCoeff() == 0.0);
  CHECK((b0.plane(0) - b.plane(0)).abs().maxCoeff() == 0.0);

  const auto [a1, b1] = crop_to_overlap(a, b, 10, -5);
  CHECK(a1.height() == 90);
  CHECK(a1.width() == 195);
  CHECK(b1.height() == 90);
  CHECK(b1.width() == 195);

  const Image moved = shift_replicate(a, 4, -6);
  const auto [ca, cb] = crop_to_overlap(a, moved, 4, -6);
  CHECK(ca.same_shape(cb));
  CHECK((ca.plane(0) - cb.plane(0)).abs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(crop_to_overlap(a, b, 100, 0), ValueError);
  CHECK_THROWS_AS(crop_to_overlap(a, b, 0, -200), ValueError);
  CHECK_THROWS_AS(crop_to_overlap(a, smoothed_noise(50, 50, 1, 43), 0, 0), ShapeError);
}

TEST_CASE("downscale_to_height") {
  const Image tall(2048, 3072, 1);
  const Image canon = downscale_to_height(tall, 1024);
  CHECK(canon.height() == 1024);
  CHECK(canon.width() == 1536);

  const Image odd = smoothed_noise(100, 37, 1, 44);
  const Image half = downscale_to_height(odd, 50);
  CHECK(half.height() == 50);
  CHECK(half.width() == 19);

  const Image keep = smoothed_noise(64, 48, 3, 45);
  const Image same = downscale_to_height(keep, 64);
  CHECK(same.width() == 48);
  for (int c = 0; c < 3; ++c)
    CHECK((same.plane(c) - keep.plane(c)).abs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(downscale_to_height(keep, 0), ValueError);
}

TEST_CASE("prep pipeline yields near-identical crops") {
  const Image wide = smoothed_noise(200, 160, 3, 51);
  const Image shallow = shift_replicate(wide, 4, -6);
  const PrepResult result = prep_pair(wide, shallow, 10, 96);
  CHECK(result.dy == 4);
  CHECK(result.dx == -6);
  CHECK(result.wide.height() == 96);
  CHECK(result.wide.same_shape(result.shallow));
  CHECK(psnr(result.wide, result.shallow) >= 50.0);
}

TEST_CASE("manifest JSON round trip") {
  PairManifest m;
  m.split = "val";
  m.search = 10;
  m.entries.push_back({"1", "/d/1_wide.png", "/d/1_shallow.png", 3, -2, 1024, 1536});
  m.entries.push_back({"2", "/d/2_wide.png", "/d/2_shallow.png", 0, 0, 0, 0});
  m.warnings.push_back("9_wide.png has no shallow counterpart");

  const std::string text = manifest_to_json(m);
  const PairManifest back = manifest_from_json(text);
  CHECK(back == m);

  const fs::path path = fs::temp_directory_path() / "bokehkit_manifest.json";
  save_manifest(m, path.string());
  CHECK(load_manifest(path.string()) == m);
  fs::remove(path);

  CHECK_THROWS_AS(manifest_from_json("not json"), FormatError);
  CHECK_THROWS_AS(manifest_from_json("{\"split\": \"train\"}"), FormatError);

  PairManifest bad = m;
  bad.split = "holdout";
  CHECK_THROWS_AS(manifest_to_json(bad), ValueError);
  bad = m;
  bad.entries[0].dy = 99;
  CHECK_THROWS_AS(manifest_to_json(bad), ValueError);
  bad = m;
  bad.entries.push_back(bad.entries[0]);
  CHECK_THROWS_AS(manifest_to_json(bad), ValueError);
  CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.json"), IoError);
}
