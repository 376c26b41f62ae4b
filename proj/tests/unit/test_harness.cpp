#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

#include "bokehkit/core/png_io.hpp"
#include "bokehkit/core/random.hpp"
#include "bokehkit/harness/bench.hpp"
#include "bokehkit/harness/evaluate.hpp"
#include "bokehkit/harness/leaderboard.hpp"

using namespace bokehkit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& stem) : path(fs::temp_directory_path() / stem) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("summarize_runtimes") {
  const RuntimeStats one = summarize_runtimes({7.5});
  CHECK(one.median_ms == 7.5);
  CHECK(one.mean_ms == 7.5);
  CHECK(one.p95_ms == 7.5);
  CHECK(one.samples == 1);

  const RuntimeStats odd = summarize_runtimes({3.0, 1.0, 2.0});
  CHECK(odd.median_ms == 2.0);
  CHECK(odd.mean_ms == 2.0);
  CHECK(odd.p95_ms == 3.0);

  const RuntimeStats even = summarize_runtimes({4.0, 1.0, 2.0, 3.0});
  CHECK(even.median_ms == 2.5);
  CHECK(even.p95_ms == 4.0);

  std::vector<double> twenty;
  for (int i = 1; i <= 20; ++i) twenty.push_back(static_cast<double>(i));
  CHECK(summarize_runtimes(twenty).p95_ms == 19.0);  // nearest rank

  CHECK_THROWS_AS(summarize_runtimes({}), ValueError);
}

TEST_CASE("evaluate_pairs on synthetic directories") {
  TempDir pred("bokehkit_eval_pred");
  TempDir gt("bokehkit_eval_gt");

  std::mt19937_64 rng(61);
  for (int i = 0; i < 4; ++i) {
    const Image img = random_image(32, 32, 3, rng);
    const std::string name = std::to_string(i) + ".png";
    save_image(img, (pred.path / name).string());
    save_image(img, (gt.path / name).string());
  }
  save_image(Image::constant(32, 32, 3, 0.5), (pred.path / "c.png").string());
  save_image(Image::constant(32, 32, 3, 0.6), (gt.path / "c.png").string());
  save_image(Image::constant(32, 32, 3, 0.1), (pred.path / "stray.png").string());

  const EvalReport report = evaluate_pairs(pred.path.string(), gt.path.string());
  REQUIRE(report.rows.size() == 5);
  REQUIRE(report.missing.size() == 1);
  CHECK(report.missing[0].find("stray.png") != std::string::npos);

  // rows sorted by filename: 0,1,2,3 identical pairs then c
  for (int i = 0; i < 4; ++i) {
    CHECK(report.rows[static_cast<size_t>(i)].id == std::to_string(i) + ".png");
    CHECK(report.rows[static_cast<size_t>(i)].psnr_db == doctest::Approx(100.0));
    CHECK(report.rows[static_cast<size_t>(i)].ssim_value == doctest::Approx(1.0));
  }
  CHECK(report.rows[4].id == "c.png");
  CHECK(report.rows[4].psnr_db == doctest::Approx(20.0).epsilon(1e-4));

  double sum = 0;
  for (const auto& row : report.rows) sum += row.psnr_db;
  CHECK(report.mean_psnr == doctest::Approx(sum / 5.0).epsilon(1e-12));
  CHECK_FALSE(report.score_available);

  EvalOptions opt;
  opt.jobs = 4;
  opt.runtime_samples_ms = {28.1};
  const EvalReport parallel = evaluate_pairs(pred.path.string(), gt.path.string(), opt);
  CHECK(eval_report_to_json(parallel).find("\"score\"") != std::string::npos);
  CHECK(parallel.runtime.median_ms == 28.1);
  CHECK(parallel.score > 0.0);

  // byte-identical across parallelism
  EvalOptions serial = opt;
  serial.jobs = 1;
  CHECK(eval_report_to_json(evaluate_pairs(pred.path.string(), gt.path.string(), serial)) ==
        eval_report_to_json(parallel));
  CHECK(eval_report_to_csv(evaluate_pairs(pred.path.string(), gt.path.string(), serial)) ==
        eval_report_to_csv(parallel));
}

TEST_CASE("evaluate_pairs error cases") {
  TempDir pred("bokehkit_eval_err_pred");
  TempDir gt("bokehkit_eval_err_gt");
  save_image(Image::constant(16, 16, 1, 0.2), (pred.path / "a.png").string());
  save_image(Image::constant(16, 16, 1, 0.2), (gt.path / "b.png").string());
  CHECK_THROWS_AS(evaluate_pairs(pred.path.string(), gt.path.string()), ValueError);
  CHECK_THROWS_AS(evaluate_pairs((pred.path / "nope").string(), gt.path.string()), IoError);

  save_image(Image::constant(16, 16, 1, 0.2), (gt.path / "a.png").string());
  EvalOptions opt;
  opt.jobs = 0;
  CHECK_THROWS_AS(evaluate_pairs(pred.path.string(), gt.path.string(), opt), ValueError);

  save_image(Image::constant(20, 16, 1, 0.2), (pred.path / "b.png").string());
  CHECK_THROWS_AS(evaluate_pairs(pred.path.string(), gt.path.string()), ShapeError);
}

TEST_CASE("bench_forward samples the forward pass") {
  NetSpec spec;
  spec.levels = 2;
  spec.base_channels = 4;
  const WeightStore weights = random_weights(spec, 3);

  const BenchResult single = bench_forward(spec, weights, 32, 0, 1);
  CHECK(single.stats.samples == 1);
  CHECK(single.stats.median_ms == single.stats.mean_ms);
  CHECK(single.stats.median_ms > 0.0);
  CHECK(single.flops == flop_count(spec, 32, 32));

  CHECK_THROWS_AS(bench_forward(spec, weights, 32, 0, 0), ValueError);
  CHECK_THROWS_AS(bench_forward(spec, weights, 32, -1, 1), ValueError);
}

TEST_CASE("bench_forward medians scale with size"
          * doctest::may_fail()) {
  NetSpec spec;
  spec.levels = 2;
  spec.base_channels = 8;
  const WeightStore weights = random_weights(spec, 4);

  const BenchResult small = bench_forward(spec, weights, 64, 1, 7);
  const BenchResult big = bench_forward(spec, weights, 128, 1, 7);
  const double ratio = big.stats.median_ms / small.stats.median_ms;
  INFO("median ratio ", ratio);
  CHECK(ratio > 4.0 * 0.7);
  CHECK(ratio < 4.0 * 1.3);

  const BenchResult again = bench_forward(spec, weights, 64, 1, 7);
  const double drift = again.stats.median_ms / small.stats.median_ms;
  INFO("repeat drift ", drift);
  CHECK(drift > 0.8);
  CHECK(drift < 1.2);
}

TEST_CASE("emit_leaderboard formats and sorts") {
  const auto rows = mai2022_reference_rows();
  const std::string csv = emit_leaderboard(rows, "csv");
  CHECK(csv.rfind("team,psnr,ssim,runtime_ms,score\n", 0) == 0);
  const size_t antins = csv.find("Antins_cv");
  const size_t enerzai = csv.find("ENERZAi");
  const size_t pynet = csv.find("PyNET");
  const size_t miaigo = csv.find("MiAIgo");
  REQUIRE(antins != std::string::npos);
  CHECK(antins < enerzai);
  CHECK(enerzai < pynet);
  CHECK(pynet < miaigo);

  const std::string md = emit_leaderboard(rows, "markdown");
  CHECK(md.rfind("| Team |", 0) == 0);
  CHECK(md.find("| Antins_cv |") != std::string::npos);

  const std::vector<LeaderboardRow> single = {{"Solo", 20.0, 0.9, 10.0, 42.0}};
  const std::string one = emit_leaderboard(single, "csv");
  CHECK(one == "team,psnr,ssim,runtime_ms,score\nSolo,20,0.9,10,42\n");

  std::vector<LeaderboardRow> tied = {{"Beta", 20.0, 0.9, 10.0, 5.0},
                                      {"Alpha", 21.0, 0.9, 10.0, 5.0}};
  const std::string tie_csv = emit_leaderboard(tied, "csv");
  CHECK(tie_csv.find("Alpha") < tie_csv.find("Beta"));

  CHECK_THROWS_AS(emit_leaderboard({}, "csv"), ValueError);
  CHECK_THROWS_AS(emit_leaderboard(rows, "html"), ValueError);
}

TEST_CASE("leaderboard CSV round trip") {
  const auto rows = sort_leaderboard(mai2022_reference_rows());
  const std::string csv = emit_leaderboard(rows, "csv");
  const auto parsed = parse_leaderboard_csv(csv);
  REQUIRE(parsed.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(parsed[i].team == rows[i].team);
    CHECK(parsed[i].psnr == doctest::Approx(rows[i].psnr).epsilon(1e-9));
    CHECK(parsed[i].ssim == doctest::Approx(rows[i].ssim).epsilon(1e-9));
    CHECK(parsed[i].runtime_ms == doctest::Approx(rows[i].runtime_ms).epsilon(1e-9));
    CHECK(parsed[i].score == doctest::Approx(rows[i].score).epsilon(1e-9));
  }

  CHECK_THROWS_AS(parse_leaderboard_csv("no header\n"), FormatError);
  CHECK_THROWS_AS(parse_leaderboard_csv("team,psnr,ssim,runtime_ms,score\n"), FormatError);
  CHECK_THROWS_AS(parse_leaderboard_csv("team,psnr,ssim,runtime_ms,score\nX,1\n"),
                  FormatError);
}
