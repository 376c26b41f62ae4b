#pragma once

#include <string>
#include <vector>

#include "bokehkit/metrics/metrics.hpp"

namespace bokehkit {

struct EvalRow {
  std::string id;
  double psnr_db = 0.0;
  double ssim_value = 0.0;
};

struct RuntimeStats {
  double median_ms = 0.0;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  int samples = 0;
};

// median, mean, and nearest-rank p95 of wall-clock samples
RuntimeStats summarize_runtimes(std::vector<double> samples_ms);

struct EvalOptions {
  int jobs = 1;
  std::vector<double> runtime_samples_ms;  // claimed model runtimes, may be empty
  double score_constant = default_score_constant();
};

struct EvalReport {
  std::vector<EvalRow> rows;          // sorted by filename
  std::vector<std::string> missing;   // files present on one side only
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  RuntimeStats runtime;
  double score = 0.0;
  bool score_available = false;
  std::string pred_dir;
  std::string gt_dir;
  int jobs = 1;
  double score_constant = 0.0;
};

// PSNR/SSIM for every filename present in both directories. Rows are
// ordered by filename and computed independently, so the report is
// byte-identical for any jobs value.
EvalReport evaluate_pairs(const std::string& pred_dir, const std::string& gt_dir,
                          const EvalOptions& options = {});

std::string eval_report_to_json(const EvalReport& report);
std::string eval_report_to_csv(const EvalReport& report);

}  // namespace bokehkit
