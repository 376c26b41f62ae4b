#pragma once

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "bokehkit/core/error.hpp"
#include "bokehkit/metrics/metrics.hpp"

namespace bokehkit {

namespace detail {

inline std::string compact_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

inline std::vector<LeaderboardRow> sort_leaderboard(std::vector<LeaderboardRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.team < b.team;
  });
  return rows;
}

// Rows sorted by score descending (ties by team name) in `csv` or `markdown`.
inline std::string emit_leaderboard(std::vector<LeaderboardRow> rows,
                                    const std::string& format) {
  if (rows.empty()) throw ValueError("emit_leaderboard: no rows");
  if (format != "csv" && format != "markdown")
    throw ValueError("emit_leaderboard: format must be csv or markdown");
  for (const auto& row : rows) row.validate();
  rows = sort_leaderboard(std::move(rows));

  std::string out;
  if (format == "csv") {
    out = "team,psnr,ssim,runtime_ms,score\n";
    for (const auto& r : rows)
      out += r.team + "," + detail::compact_number(r.psnr) + "," +
             detail::compact_number(r.ssim) + "," +
             detail::compact_number(r.runtime_ms) + "," + detail::compact_number(r.score) +
             "\n";
  } else {
    out = "| Team | PSNR | SSIM | Runtime (ms) | Score |\n";
    out += "| --- | --- | --- | --- | --- |\n";
    for (const auto& r : rows)
      out += "| " + r.team + " | " + detail::compact_number(r.psnr) + " | " +
             detail::compact_number(r.ssim) + " | " +
             detail::compact_number(r.runtime_ms) + " | " + detail::compact_number(r.score) +
             " |\n";
  }
  return out;
}

// `team,psnr,ssim,runtime_ms,score` with a header line
inline std::vector<LeaderboardRow> parse_leaderboard_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("team,", 0) != 0)
    throw FormatError("leaderboard: missing 'team,...' header");
  std::vector<LeaderboardRow> rows;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    LeaderboardRow row;
    std::string cell;
    try {
      if (!std::getline(fields, row.team, ',')) throw std::invalid_argument("team");
      if (!std::getline(fields, cell, ',')) throw std::invalid_argument("psnr");
      row.psnr = std::stod(cell);
      if (!std::getline(fields, cell, ',')) throw std::invalid_argument("ssim");
      row.ssim = std::stod(cell);
      if (!std::getline(fields, cell, ',')) throw std::invalid_argument("runtime_ms");
      row.runtime_ms = std::stod(cell);
      if (!std::getline(fields, cell, ',')) throw std::invalid_argument("score");
      row.score = std::stod(cell);
    } catch (const std::exception&) {
      throw FormatError("leaderboard: malformed row at line " + std::to_string(lineno));
    }
    row.validate();
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("leaderboard: no data rows");
  return rows;
}

}  // namespace bokehkit
