#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bokehkit/core/error.hpp"
#include "bokehkit/core/png_io.hpp"
#include "bokehkit/data/pairs.hpp"
#include "bokehkit/harness/bench.hpp"
#include "bokehkit/harness/evaluate.hpp"
#include "bokehkit/harness/gradcheck.hpp"
#include "bokehkit/harness/leaderboard.hpp"
#include "bokehkit/loss/gradients.hpp"
#include "bokehkit/net/tinynet.hpp"
#include "bokehkit/net/weights_io.hpp"
#include "bokehkit/render/renderer.hpp"

namespace {

using namespace bokehkit;
using nlohmann::json;

constexpr int kExitIo = 2;
constexpr int kExitFormat = 3;
constexpr int kExitValue = 4;
constexpr int kExitGradcheck = 5;

// Optional JSON config file: an object keyed by long option names. Values
// fill in options the command line left untouched; explicit flags win.
class ConfigFile {
public:
  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      cfg_ = json::parse(buf.str());
    } catch (const json::exception& e) {
      throw FormatError("config: invalid JSON in '" + path + "': " + e.what());
    }
    if (!cfg_.is_object()) throw FormatError("config: '" + path + "' must hold a JSON object");
  }

  template <typename T>
  void fallback(const CLI::App* cmd, const std::string& flag, T& value) const {
    const std::string key = flag.substr(2);
    if (cfg_.is_null() || cmd->count(flag) > 0 || !cfg_.contains(key)) return;
    try {
      value = cfg_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw FormatError("config: bad value for '" + key + "': " + e.what());
    }
  }

private:
  json cfg_;
};

void write_output(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

void require_given(const std::string& value, const char* what) {
  if (value.empty()) throw ValueError(std::string(what) + " is required");
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct SpecFlags {
  int levels = 3;
  int base_channels = 16;
  double leaky_slope = 0.2;
  bool no_skips = false;
};

void register_spec_flags(CLI::App* cmd, SpecFlags& f) {
  cmd->add_option("--levels", f.levels, "U-Net level count");
  cmd->add_option("--base-channels", f.base_channels, "channel width of the first level");
  cmd->add_option("--leaky-slope", f.leaky_slope, "leaky ReLU slope");
  cmd->add_flag("--no-skips", f.no_skips, "disable skip connections");
}

void spec_fallback(const ConfigFile& cfg, const CLI::App* cmd, SpecFlags& f) {
  cfg.fallback(cmd, "--levels", f.levels);
  cfg.fallback(cmd, "--base-channels", f.base_channels);
  cfg.fallback(cmd, "--leaky-slope", f.leaky_slope);
  cfg.fallback(cmd, "--no-skips", f.no_skips);
}

NetSpec to_spec(const SpecFlags& f) {
  NetSpec spec;
  spec.levels = f.levels;
  spec.base_channels = f.base_channels;
  spec.leaky_slope = f.leaky_slope;
  spec.skip_connections = !f.no_skips;
  spec.validate();
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bokeh rendering challenge toolkit"};
  app.require_subcommand(1);

  // render
  auto* render = app.add_subcommand("render", "disparity-guided disc-blur bokeh");
  struct {
    std::string input, disparity, output, config;
    double max_radius = 16.0, focal = 1.0, threshold = 0.6, feather = 0.05;
    int jobs = 1, depth = 16;
  } R;
  render->add_option("--input", R.input, "sharp input PNG");
  render->add_option("--disparity", R.disparity, "disparity PNG (first channel used)");
  render->add_option("--output", R.output, "output PNG path");
  render->add_option("--max-radius", R.max_radius, "blur radius at maximum defocus");
  render->add_option("--focal", R.focal, "in-focus disparity after normalization");
  render->add_option("--threshold", R.threshold, "saliency threshold");
  render->add_option("--feather", R.feather, "saliency feather half-width");
  render->add_option("--depth", R.depth, "output bit depth (8 or 16)");
  render->add_option("--jobs", R.jobs, "worker threads");
  render->add_option("--config", R.config, "JSON config file");

  // infer
  auto* infer = app.add_subcommand("infer", "tiny U-Net forward pass");
  struct {
    std::string input, weights, output, config;
    int jobs = 1, depth = 16;
    SpecFlags spec;
  } I;
  infer->add_option("--input", I.input, "input PNG");
  infer->add_option("--weights", I.weights, "BKW1 weight file");
  infer->add_option("--output", I.output, "output PNG path");
  register_spec_flags(infer, I.spec);
  infer->add_option("--depth", I.depth, "output bit depth (8 or 16)");
  infer->add_option("--jobs", I.jobs, "worker threads");
  infer->add_option("--config", I.config, "JSON config file");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "PSNR/SSIM over a prediction directory");
  struct {
    std::string pred, gt, output, config, format = "json";
    std::vector<double> runtime_ms;
    double c = default_score_constant();
    int jobs = 1;
  } E;
  evaluate->add_option("--pred", E.pred, "directory of predicted PNGs");
  evaluate->add_option("--gt", E.gt, "directory of ground-truth PNGs");
  evaluate->add_option("--runtime-ms", E.runtime_ms, "claimed model runtime samples");
  evaluate->add_option("--c", E.c, "score normalization constant");
  evaluate->add_option("--format", E.format, "json or csv");
  evaluate->add_option("--output", E.output, "report path (default stdout)");
  evaluate->add_option("--jobs", E.jobs, "worker threads");
  evaluate->add_option("--config", E.config, "JSON config file");

  // score
  auto* score = app.add_subcommand("score", "challenge score from PSNR and runtime");
  struct {
    std::string config;
    double psnr = 0.0, runtime_ms = 0.0;
    double c = default_score_constant();
  } S;
  score->add_option("--psnr", S.psnr, "fidelity in dB");
  score->add_option("--runtime-ms", S.runtime_ms, "runtime in milliseconds");
  score->add_option("--c", S.c, "score normalization constant");
  score->add_option("--config", S.config, "JSON config file");

  // align
  auto* align = app.add_subcommand("align", "estimate the translation between two images");
  struct {
    std::string a, b, output, config;
    int search = 16;
  } A;
  align->add_option("--a", A.a, "reference PNG");
  align->add_option("--b", A.b, "moved PNG");
  align->add_option("--search", A.search, "search radius in pixels");
  align->add_option("--output", A.output, "result path (default stdout)");
  align->add_option("--config", A.config, "JSON config file");

  // prep
  auto* prep = app.add_subcommand("prep", "align, crop, and downscale a pair directory");
  struct {
    std::string root, out, config, split = "train";
    int search = 16, jobs = 1;
    Index height = 1024;
  } P;
  prep->add_option("--root", P.root, "directory of <id>_wide.png / <id>_shallow.png");
  prep->add_option("--out", P.out, "output directory");
  prep->add_option("--search", P.search, "alignment search radius");
  prep->add_option("--height", P.height, "target output height");
  prep->add_option("--split", P.split, "manifest split tag (train, val, test)");
  prep->add_option("--jobs", P.jobs, "worker threads");
  prep->add_option("--config", P.config, "JSON config file");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "analytic gradients vs finite differences");
  struct {
    std::string terms, corrupt_term, output, config;
    std::vector<double> eps;
    int seeds = 20;
    uint64_t seed = 1;
    double threshold = 1e-4;
  } G;
  gradcheck->add_option("--terms", G.terms, "comma-separated loss term tags (default all)");
  gradcheck->add_option("--eps", G.eps, "finite-difference steps (default 1e-5)");
  gradcheck->add_option("--seeds", G.seeds, "random fixtures per term");
  gradcheck->add_option("--seed", G.seed, "base seed");
  gradcheck->add_option("--threshold", G.threshold, "max relative error to pass");
  gradcheck->add_option("--corrupt-term", G.corrupt_term,
                        "test hook: scale the named term's analytic gradient by 1.5");
  gradcheck->add_option("--output", G.output, "report path (default stdout)");
  gradcheck->add_option("--config", G.config, "JSON config file");

  // bench
  auto* bench = app.add_subcommand("bench", "wall-clock benchmark of the forward pass");
  struct {
    std::string weights, output, config;
    Index size = 256;
    int warmup = 1, iters = 5, jobs = 1;
    uint64_t seed = 42;
    SpecFlags spec;
  } B;
  bench->add_option("--size", B.size, "square input size in pixels");
  bench->add_option("--warmup", B.warmup, "discarded passes");
  bench->add_option("--iters", B.iters, "measured passes");
  register_spec_flags(bench, B.spec);
  bench->add_option("--weights", B.weights, "BKW1 weight file (default: seeded random)");
  bench->add_option("--seed", B.seed, "seed for random weights");
  bench->add_option("--jobs", B.jobs, "worker threads");
  bench->add_option("--output", B.output, "result path (default stdout)");
  bench->add_option("--config", B.config, "JSON config file");

  // leaderboard
  auto* leaderboard = app.add_subcommand("leaderboard", "sort and format leaderboard rows");
  struct {
    std::string input, output, config, format = "markdown";
  } L;
  leaderboard->add_option("--input", L.input,
                          "CSV of team,psnr,ssim,runtime_ms,score (default: the MAI 2022 "
                          "reference rows)");
  leaderboard->add_option("--format", L.format, "csv or markdown");
  leaderboard->add_option("--output", L.output, "table path (default stdout)");
  leaderboard->add_option("--config", L.config, "JSON config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(render)) {
      ConfigFile cfg;
      if (render->count("--config")) cfg.load(R.config);
      cfg.fallback(render, "--input", R.input);
      cfg.fallback(render, "--disparity", R.disparity);
      cfg.fallback(render, "--output", R.output);
      cfg.fallback(render, "--max-radius", R.max_radius);
      cfg.fallback(render, "--focal", R.focal);
      cfg.fallback(render, "--threshold", R.threshold);
      cfg.fallback(render, "--feather", R.feather);
      cfg.fallback(render, "--depth", R.depth);
      cfg.fallback(render, "--jobs", R.jobs);
      require_given(R.input, "--input");
      require_given(R.disparity, "--disparity");
      require_given(R.output, "--output");

      const Image img = load_image(R.input);
      const DisparityMap disparity(gray_plane(load_image(R.disparity)));
      RenderParams params;
      params.max_radius = R.max_radius;
      params.focal_disparity = R.focal;
      params.mask_threshold = R.threshold;
      params.feather = R.feather;
      const Image out = render_bokeh(img, disparity, params, R.jobs);
      save_image(out, R.output, R.depth);
      std::cout << "wrote " << R.output << "\n";
    } else if (app.got_subcommand(infer)) {
      ConfigFile cfg;
      if (infer->count("--config")) cfg.load(I.config);
      cfg.fallback(infer, "--input", I.input);
      cfg.fallback(infer, "--weights", I.weights);
      cfg.fallback(infer, "--output", I.output);
      cfg.fallback(infer, "--depth", I.depth);
      cfg.fallback(infer, "--jobs", I.jobs);
      spec_fallback(cfg, infer, I.spec);
      require_given(I.input, "--input");
      require_given(I.weights, "--weights");
      require_given(I.output, "--output");

      const Image img = load_image(I.input);
      const WeightStore store = load_weights(I.weights);
      const Image out = unet_forward(img, store, to_spec(I.spec), I.jobs);
      save_image(out, I.output, I.depth);
      std::cout << "wrote " << I.output << "\n";
    } else if (app.got_subcommand(evaluate)) {
      ConfigFile cfg;
      if (evaluate->count("--config")) cfg.load(E.config);
      cfg.fallback(evaluate, "--pred", E.pred);
      cfg.fallback(evaluate, "--gt", E.gt);
      cfg.fallback(evaluate, "--runtime-ms", E.runtime_ms);
      cfg.fallback(evaluate, "--c", E.c);
      cfg.fallback(evaluate, "--format", E.format);
      cfg.fallback(evaluate, "--output", E.output);
      cfg.fallback(evaluate, "--jobs", E.jobs);
      require_given(E.pred, "--pred");
      require_given(E.gt, "--gt");

      EvalOptions options;
      options.jobs = E.jobs;
      options.runtime_samples_ms = E.runtime_ms;
      options.score_constant = E.c;
      const EvalReport report = evaluate_pairs(E.pred, E.gt, options);
      if (E.format == "json")
        write_output(eval_report_to_json(report), E.output);
      else if (E.format == "csv")
        write_output(eval_report_to_csv(report), E.output);
      else
        throw ValueError("evaluate: --format must be json or csv");
    } else if (app.got_subcommand(score)) {
      ConfigFile cfg;
      if (score->count("--config")) cfg.load(S.config);
      cfg.fallback(score, "--psnr", S.psnr);
      cfg.fallback(score, "--runtime-ms", S.runtime_ms);
      cfg.fallback(score, "--c", S.c);
      std::cout << format_number(challenge_score(S.psnr, S.runtime_ms, S.c)) << "\n";
    } else if (app.got_subcommand(align)) {
      ConfigFile cfg;
      if (align->count("--config")) cfg.load(A.config);
      cfg.fallback(align, "--a", A.a);
      cfg.fallback(align, "--b", A.b);
      cfg.fallback(align, "--search", A.search);
      cfg.fallback(align, "--output", A.output);
      require_given(A.a, "--a");
      require_given(A.b, "--b");

      const auto [dy, dx] = estimate_translation(load_image(A.a), load_image(A.b), A.search);
      json j;
      j["dy"] = dy;
      j["dx"] = dx;
      write_output(j.dump(2) + "\n", A.output);
    } else if (app.got_subcommand(prep)) {
      ConfigFile cfg;
      if (prep->count("--config")) cfg.load(P.config);
      cfg.fallback(prep, "--root", P.root);
      cfg.fallback(prep, "--out", P.out);
      cfg.fallback(prep, "--search", P.search);
      cfg.fallback(prep, "--height", P.height);
      cfg.fallback(prep, "--split", P.split);
      cfg.fallback(prep, "--jobs", P.jobs);
      require_given(P.root, "--root");
      require_given(P.out, "--out");
      if (P.jobs < 1) throw ValueError("prep: --jobs must be >= 1");

      PairManifest manifest = scan_pairs(P.root);
      manifest.split = P.split;
      manifest.search = P.search;
      std::filesystem::create_directories(P.out);

      const auto process = [&](size_t i0, size_t i1) {
        for (size_t i = i0; i < i1; ++i) {
          PairEntry& e = manifest.entries[i];
          const PrepResult r =
              prep_pair(load_image(e.wide_path), load_image(e.shallow_path), P.search, P.height);
          const std::string wide_out =
              (std::filesystem::path(P.out) / (e.id + "_wide.png")).string();
          const std::string shallow_out =
              (std::filesystem::path(P.out) / (e.id + "_shallow.png")).string();
          save_image(r.wide, wide_out);
          save_image(r.shallow, shallow_out);
          e.wide_path = wide_out;
          e.shallow_path = shallow_out;
          e.dy = r.dy;
          e.dx = r.dx;
          e.height = r.wide.height();
          e.width = r.wide.width();
        }
      };
      const size_t n = manifest.entries.size();
      const size_t workers = std::min<size_t>(static_cast<size_t>(P.jobs), n);
      if (workers <= 1) {
        process(0, n);
      } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (size_t t = 0; t < workers; ++t) {
          const size_t i0 = n * t / workers, i1 = n * (t + 1) / workers;
          pool.emplace_back([&, t, i0, i1] {
            try {
              process(i0, i1);
            } catch (...) {
              errors[t] = std::current_exception();
            }
          });
        }
        for (auto& th : pool) th.join();
        for (const auto& err : errors)
          if (err) std::rethrow_exception(err);
      }
      const std::string manifest_path =
          (std::filesystem::path(P.out) / "manifest.json").string();
      save_manifest(manifest, manifest_path);
      std::cout << "prepared " << n << " pairs, " << manifest.warnings.size()
                << " warnings -> " << manifest_path << "\n";
    } else if (app.got_subcommand(gradcheck)) {
      ConfigFile cfg;
      if (gradcheck->count("--config")) cfg.load(G.config);
      cfg.fallback(gradcheck, "--terms", G.terms);
      cfg.fallback(gradcheck, "--eps", G.eps);
      cfg.fallback(gradcheck, "--seeds", G.seeds);
      cfg.fallback(gradcheck, "--seed", G.seed);
      cfg.fallback(gradcheck, "--threshold", G.threshold);
      cfg.fallback(gradcheck, "--corrupt-term", G.corrupt_term);

      GradcheckOptions options;
      options.seed_count = G.seeds;
      options.base_seed = G.seed;
      options.threshold = G.threshold;
      if (!G.eps.empty()) options.eps_values = G.eps;
      if (!G.terms.empty()) {
        options.terms.clear();
        std::istringstream list(G.terms);
        std::string tag;
        while (std::getline(list, tag, ','))
          if (!tag.empty()) options.terms.push_back(loss_term_from_string(tag));
        if (options.terms.empty()) throw ValueError("gradcheck: --terms names no terms");
      }
      GradientCorruptor corruptor;
      if (!G.corrupt_term.empty()) {
        const LossTerm target = loss_term_from_string(G.corrupt_term);
        corruptor = [target](LossTerm term, ImageT<double>& grad) {
          if (term != target) return;
          for (Index c = 0; c < grad.channels(); ++c) grad.plane(c) *= 1.5;
        };
      }

      const auto results = run_gradcheck(options, corruptor);
      std::string text = "term          eps        max_rel_error  worst_seed  status\n";
      std::vector<std::string> failing;
      for (const auto& r : results) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-12s  %-9.3g  %-13.6g  %-10llu  %s\n",
                      to_string(r.term), r.eps, r.max_rel_error,
                      static_cast<unsigned long long>(r.worst_seed),
                      r.pass ? "PASS" : "FAIL");
        text += line;
        if (!r.pass) failing.push_back(to_string(r.term));
      }
      if (failing.empty()) {
        text += "all terms passed (threshold " + format_number(G.threshold) + ")\n";
      } else {
        text += "gradcheck failed:";
        for (const auto& name : failing) text += " " + name;
        text += "\n";
      }
      write_output(text, G.output);
      if (!failing.empty()) return kExitGradcheck;
    } else if (app.got_subcommand(bench)) {
      ConfigFile cfg;
      if (bench->count("--config")) cfg.load(B.config);
      cfg.fallback(bench, "--size", B.size);
      cfg.fallback(bench, "--warmup", B.warmup);
      cfg.fallback(bench, "--iters", B.iters);
      cfg.fallback(bench, "--weights", B.weights);
      cfg.fallback(bench, "--seed", B.seed);
      cfg.fallback(bench, "--jobs", B.jobs);
      cfg.fallback(bench, "--output", B.output);
      spec_fallback(cfg, bench, B.spec);

      const NetSpec spec = to_spec(B.spec);
      const WeightStore store =
          B.weights.empty() ? random_weights(spec, B.seed) : load_weights(B.weights);
      const BenchResult result = bench_forward(spec, store, B.size, B.warmup, B.iters, B.jobs);
      json j;
      j["size"] = result.size;
      j["warmup"] = result.warmup;
      j["iters"] = result.iters;
      j["flops"] = result.flops;
      j["median_ms"] = result.stats.median_ms;
      j["mean_ms"] = result.stats.mean_ms;
      j["p95_ms"] = result.stats.p95_ms;
      write_output(j.dump(2) + "\n", B.output);
    } else if (app.got_subcommand(leaderboard)) {
      ConfigFile cfg;
      if (leaderboard->count("--config")) cfg.load(L.config);
      cfg.fallback(leaderboard, "--input", L.input);
      cfg.fallback(leaderboard, "--format", L.format);
      cfg.fallback(leaderboard, "--output", L.output);

      std::vector<LeaderboardRow> rows;
      if (L.input.empty()) {
        rows = mai2022_reference_rows();
      } else {
        std::ifstream in(L.input);
        if (!in) throw IoError("leaderboard: cannot open '" + L.input + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        rows = parse_leaderboard_csv(buf.str());
      }
      write_output(emit_leaderboard(rows, L.format), L.output);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValue;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
