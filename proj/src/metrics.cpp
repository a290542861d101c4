#include "osnd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "osnd/csv.hpp"
#include "osnd/errors.hpp"

namespace osnd {

namespace {

std::pair<std::size_t, std::size_t> population_sizes(std::span<const double> scores,
                                                     const std::vector<bool>& is_open) {
  if (scores.size() != is_open.size()) {
    throw UndefinedMetric("scores and truth flags differ in length");
  }
  const auto open = static_cast<std::size_t>(std::count(is_open.begin(), is_open.end(), true));
  const std::size_t close = is_open.size() - open;
  if (open == 0 || close == 0) {
    throw UndefinedMetric("metric needs both open and close samples");
  }
  return {close, open};
}

}  // namespace

double auroc(std::span<const double> scores, const std::vector<bool>& is_open) {
  const auto [n_close, n_open] = population_sizes(scores, is_open);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of 1-based average ranks of the open samples (Mann-Whitney U).
  double open_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (is_open[order[t]]) open_rank_sum += avg_rank;
    }
    i = j + 1;
  }
  const double pos = static_cast<double>(n_open);
  const double u = open_rank_sum - pos * (pos + 1.0) / 2.0;
  return u / (pos * static_cast<double>(n_close));
}

double fpr_at_tpr95(std::span<const double> scores, const std::vector<bool>& is_open) {
  const auto [n_close, n_open] = population_sizes(scores, is_open);
  std::vector<double> open_scores;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (is_open[i]) open_scores.push_back(scores[i]);
  }
  std::sort(open_scores.begin(), open_scores.end(), std::greater<>());
  // Smallest m with m / n_open >= 0.95, in integer arithmetic.
  const std::size_t needed = (95 * n_open + 99) / 100;
  const double threshold = open_scores[needed - 1];
  std::size_t false_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!is_open[i] && scores[i] >= threshold) ++false_pos;
  }
  return static_cast<double>(false_pos) / static_cast<double>(n_close);
}

MetricsReport build_report(const std::vector<ScoreRecord>& records,
                           const std::vector<bool>& is_open, int bins, std::uint64_t seed) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  if (records.empty()) throw UndefinedMetric("no score records");
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const ScoreRecord& r : records) scores.push_back(r.score);

  MetricsReport report;
  report.method = to_string(records.front().method);
  report.seed = seed;
  report.auroc = auroc(scores, is_open);
  report.fpr_at_tpr95 = fpr_at_tpr95(scores, is_open);
  report.n_open = static_cast<std::size_t>(std::count(is_open.begin(), is_open.end(), true));
  report.n_close = is_open.size() - report.n_open;
  report.bins = bins;
  report.hist_close.assign(static_cast<std::size_t>(bins), 0);
  report.hist_open.assign(static_cast<std::size_t>(bins), 0);

  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double range = *hi - *lo;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double v = range > 0.0 ? (scores[i] - *lo) / range : 0.5;
    const int bin = std::min(bins - 1, static_cast<int>(std::floor(v * bins)));
    (is_open[i] ? report.hist_open : report.hist_close)[static_cast<std::size_t>(bin)]++;
  }
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["method"] = method;
  doc["seed"] = seed;
  doc["auroc"] = auroc;
  doc["fpr_at_tpr95"] = fpr_at_tpr95;
  doc["n_close"] = n_close;
  doc["n_open"] = n_open;
  doc["bins"] = bins;
  doc["hist_close"] = hist_close;
  doc["hist_open"] = hist_open;
  return doc.dump(2) + "\n";
}

std::string MetricsReport::to_text() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "method        " << method << '\n'
      << "seed          " << seed << '\n'
      << "AUROC         " << auroc << '\n'
      << "FPR@TPR95     " << fpr_at_tpr95 << '\n'
      << "close samples " << n_close << '\n'
      << "open samples  " << n_open << '\n';
  return out.str();
}

std::string MetricsReport::histogram_csv() const {
  std::ostringstream out;
  out << "bin,lower,upper,close,open\n";
  for (int b = 0; b < bins; ++b) {
    out << b << ',' << format_double(static_cast<double>(b) / bins) << ','
        << format_double(static_cast<double>(b + 1) / bins) << ','
        << hist_close[static_cast<std::size_t>(b)] << ','
        << hist_open[static_cast<std::size_t>(b)] << '\n';
  }
  return out.str();
}

}  // namespace osnd
