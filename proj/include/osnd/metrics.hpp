#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "osnd/score.hpp"

namespace osnd {

// Open samples are the positive class and a higher score means "more open".
// Both metrics throw UndefinedMetric unless both populations are nonempty.

// P(score_open > score_close) + 0.5 * P(tie), from average ranks.
double auroc(std::span<const double> scores, const std::vector<bool>& is_open);

// FPR at the largest threshold t whose TPR (open samples with score >= t)
// is at least 0.95.
double fpr_at_tpr95(std::span<const double> scores, const std::vector<bool>& is_open);

struct MetricsReport {
  std::string method;
  std::uint64_t seed = 0;
  double auroc = 0.0;
  double fpr_at_tpr95 = 0.0;
  std::size_t n_close = 0;
  std::size_t n_open = 0;
  int bins = 50;
  // Counts of min-max-normalized scores per bin; display only.
  std::vector<int> hist_close;
  std::vector<int> hist_open;

  std::string to_json() const;
  std::string to_text() const;
  std::string histogram_csv() const;
};

MetricsReport build_report(const std::vector<ScoreRecord>& records,
                           const std::vector<bool>& is_open, int bins = 50,
                           std::uint64_t seed = 0);

}  // namespace osnd
