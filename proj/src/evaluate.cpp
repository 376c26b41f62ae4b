#include "bokehkit/harness/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <thread>

#include <json.hpp>

#include "bokehkit/core/error.hpp"
#include "bokehkit/core/png_io.hpp"

namespace bokehkit {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> list_pngs(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("evaluate_pairs: '" + dir + "' is not a directory");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

RuntimeStats summarize_runtimes(std::vector<double> samples_ms) {
  if (samples_ms.empty()) throw ValueError("summarize_runtimes: no samples");
  std::sort(samples_ms.begin(), samples_ms.end());
  const size_t n = samples_ms.size();
  RuntimeStats stats;
  stats.samples = static_cast<int>(n);
  stats.median_ms = (n % 2 == 1) ? samples_ms[n / 2]
                                 : 0.5 * (samples_ms[n / 2 - 1] + samples_ms[n / 2]);
  double sum = 0.0;
  for (double v : samples_ms) sum += v;
  stats.mean_ms = sum / static_cast<double>(n);
  const size_t rank = static_cast<size_t>(
      std::ceil(0.95 * static_cast<double>(n)));  // nearest-rank percentile
  stats.p95_ms = samples_ms[rank - 1];
  return stats;
}

EvalReport evaluate_pairs(const std::string& pred_dir, const std::string& gt_dir,
                          const EvalOptions& options) {
  if (options.jobs < 1) throw ValueError("evaluate_pairs: jobs must be >= 1");
  const std::vector<std::string> preds = list_pngs(pred_dir);
  const std::vector<std::string> gts = list_pngs(gt_dir);

  EvalReport report;
  report.pred_dir = pred_dir;
  report.gt_dir = gt_dir;
  report.jobs = options.jobs;
  report.score_constant = options.score_constant;

  std::vector<std::string> matched;
  std::set_intersection(preds.begin(), preds.end(), gts.begin(), gts.end(),
                        std::back_inserter(matched));
  for (const auto& name : preds)
    if (!std::binary_search(gts.begin(), gts.end(), name))
      report.missing.push_back(name + " (prediction without ground truth)");
  for (const auto& name : gts)
    if (!std::binary_search(preds.begin(), preds.end(), name))
      report.missing.push_back(name + " (ground truth without prediction)");
  if (matched.empty())
    throw ValueError("evaluate_pairs: no matching filenames between '" + pred_dir + "' and '" +
                     gt_dir + "'");

  report.rows.resize(matched.size());
  const auto compute_range = [&](size_t i0, size_t i1) {
    for (size_t i = i0; i < i1; ++i) {
      const Image pred = load_image((fs::path(pred_dir) / matched[i]).string());
      const Image gt = load_image((fs::path(gt_dir) / matched[i]).string());
      if (!pred.same_shape(gt))
        throw ShapeError("evaluate_pairs: shape mismatch for '" + matched[i] + "'");
      report.rows[i] = {matched[i], psnr(pred, gt), ssim(pred, gt)};
    }
  };

  const size_t workers = std::min<size_t>(static_cast<size_t>(options.jobs), matched.size());
  if (workers <= 1) {
    compute_range(0, matched.size());
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (size_t t = 0; t < workers; ++t) {
      const size_t i0 = matched.size() * t / workers;
      const size_t i1 = matched.size() * (t + 1) / workers;
      pool.emplace_back([&, t, i0, i1] {
        try {
          compute_range(i0, i1);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (const auto& row : report.rows) {
    psnr_sum += row.psnr_db;
    ssim_sum += row.ssim_value;
  }
  report.mean_psnr = psnr_sum / static_cast<double>(report.rows.size());
  report.mean_ssim = ssim_sum / static_cast<double>(report.rows.size());

  if (!options.runtime_samples_ms.empty()) {
    report.runtime = summarize_runtimes(options.runtime_samples_ms);
    report.score =
        challenge_score(report.mean_psnr, report.runtime.median_ms, options.score_constant);
    report.score_available = true;
  }
  return report;
}

std::string eval_report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["pred_dir"] = report.pred_dir;
  j["gt_dir"] = report.gt_dir;
  j["score_constant"] = report.score_constant;
  j["mean_psnr"] = report.mean_psnr;
  j["mean_ssim"] = report.mean_ssim;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows)
    j["rows"].push_back({{"id", row.id}, {"psnr", row.psnr_db}, {"ssim", row.ssim_value}});
  j["missing"] = report.missing;
  if (report.runtime.samples > 0)
    j["runtime_ms"] = {{"median", report.runtime.median_ms},
                       {"mean", report.runtime.mean_ms},
                       {"p95", report.runtime.p95_ms},
                       {"samples", report.runtime.samples}};
  if (report.score_available) j["score"] = report.score;
  return j.dump(2) + "\n";
}

std::string eval_report_to_csv(const EvalReport& report) {
  std::string out = "id,psnr,ssim\n";
  for (const auto& row : report.rows)
    out += row.id + "," + format_number(row.psnr_db) + "," + format_number(row.ssim_value) +
           "\n";
  out += "mean," + format_number(report.mean_psnr) + "," + format_number(report.mean_ssim) +
         "\n";
  return out;
}

}  // namespace bokehkit
