#include <doctest.h>

#include <cmath>
#include <numeric>

#include "osnd/errors.hpp"
#include "osnd/metrics.hpp"

using namespace osnd;

namespace {

std::vector<ScoreRecord> records_of(const std::vector<double>& scores) {
  std::vector<ScoreRecord> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    ScoreRecord r;
    r.sample_id = "s" + std::to_string(i);
    r.score = scores[i];
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("auroc on hand-checked pools") {
  CHECK(auroc(std::vector<double>{0.7, 0.9, 0.1, 0.2}, {true, true, false, false}) == 1.0);
  // Pairs won: 0.9 beats both, 0.3 beats 0.1 only.
  CHECK(auroc(std::vector<double>{0.9, 0.3, 0.5, 0.1}, {true, true, false, false}) == 0.75);
  CHECK(auroc(std::vector<double>{0.4, 0.4, 0.4, 0.4}, {true, false, true, false}) == 0.5);
}

TEST_CASE("auroc needs both populations") {
  CHECK_THROWS_AS(auroc(std::vector<double>{0.1, 0.2}, {true, true}), UndefinedMetric);
  CHECK_THROWS_AS(fpr_at_tpr95(std::vector<double>{0.1, 0.2}, {false, false}), UndefinedMetric);
}

TEST_CASE("fpr at 95 percent tpr") {
  // Every open sample must be caught, so the threshold falls to 0.1.
  CHECK(fpr_at_tpr95(std::vector<double>{0.9, 0.8, 0.7, 0.1, 0.6, 0.2},
                     {true, true, true, true, false, false}) == 1.0);
  CHECK(fpr_at_tpr95(std::vector<double>{0.9, 0.8, 0.2, 0.1}, {true, true, false, false}) == 0.0);
  // One open sample at the top score: FPR counts closes tied with it.
  CHECK(fpr_at_tpr95(std::vector<double>{0.9, 0.9, 0.5, 0.3}, {true, false, false, false}) ==
        doctest::Approx(1.0 / 3.0));
}

TEST_CASE("report histograms conserve counts") {
  const std::vector<double> scores = {0.1, 0.5, 0.9, 0.3, 0.3, 0.8, 0.2, 0.7};
  const std::vector<bool> open = {false, true, true, false, false, true, false, false};
  const MetricsReport r = build_report(records_of(scores), open, 10, 4);
  CHECK(r.n_open == 3);
  CHECK(r.n_close == 5);
  CHECK(std::accumulate(r.hist_open.begin(), r.hist_open.end(), 0) == 3);
  CHECK(std::accumulate(r.hist_close.begin(), r.hist_close.end(), 0) == 5);
  CHECK(r.seed == 4);
  CHECK(r.to_json() == build_report(records_of(scores), open, 10, 4).to_json());
  CHECK(r.histogram_csv().rfind("bin,lower,upper,close,open\n", 0) == 0);
}
