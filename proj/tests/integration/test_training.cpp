#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "osnd/cycle.hpp"
#include "osnd/detect.hpp"
#include "osnd/log.hpp"
#include "osnd/metrics.hpp"
#include "task.hpp"

using namespace osnd;
using namespace osnd::testing;

namespace {

constexpr std::uint64_t kSeeds[] = {0, 1, 2};

struct Quiet {
  Quiet() { set_log_level(LogLevel::kWarn); }
} quiet;

// Full-method runs on the standard task, shared by several cases.
struct SeedRun {
  double full_auroc = 0.0;
  double mean_open = 0.0;
  double mean_close = 0.0;
  double open_kept_epoch2 = 0.0;
  double open_kept_epoch10 = 0.0;
};

const std::vector<SeedRun>& full_runs() {
  static const std::vector<SeedRun> runs = [] {
    std::vector<SeedRun> out;
    for (std::uint64_t seed : kSeeds) {
      const TrainConfig train = task_training(seed);
      const TaskRun task = prepare_task(task_data(seed), train);
      const auto& open = task.split.eval_is_open;
      SeedRun r;
      auto open_share = [&](const std::vector<bool>& mask) {
        double kept = 0.0;
        double kept_open = 0.0;
        for (std::size_t i = 0; i < mask.size(); ++i) {
          kept += mask[i];
          kept_open += mask[i] && open[i];
        }
        return kept_open / kept;
      };
      // Masks produced after epoch e are the ones epoch e+1 trains on.
      auto observer = [&](const CycleState& s) {
        const auto& mask = s.epoch % 2 == 0 ? s.clean_mask_for_f1 : s.clean_mask_for_f2;
        if (s.epoch == 2) r.open_kept_epoch2 = open_share(mask);
        if (s.epoch == 10) r.open_kept_epoch10 = open_share(mask);
      };
      const CycleRun run =
          run_cycle_training(task.pls, task_backbone(32), train, observer);
      std::vector<double> scores;
      double so = 0.0;
      double sc = 0.0;
      for (std::size_t i = 0; i < run.scores.size(); ++i) {
        scores.push_back(run.scores[i].score);
        (open[i] ? so : sc) += run.scores[i].score;
      }
      const double n_open = static_cast<double>(std::count(open.begin(), open.end(), true));
      r.mean_open = so / n_open;
      r.mean_close = sc / (static_cast<double>(open.size()) - n_open);
      r.full_auroc = auroc(scores, open);
      out.push_back(r);
    }
    return out;
  }();
  return runs;
}

double average(double SeedRun::*field) {
  std::vector<double> v;
  for (const SeedRun& r : full_runs()) v.push_back(r.*field);
  return mean(v);
}

}  // namespace

TEST_CASE("close model fits well separated classes") {
  SyntheticConfig data = task_data(4, 5.0);
  data.image_size = 16;
  data.train_per_class = 30;
  data.test_per_class = 5;
  TrainConfig train = task_training(4);
  train.close_epochs = 20;
  const TaskRun a = prepare_task(data, train);
  MESSAGE("close-set train accuracy " << a.close.train_accuracy);
  CHECK(a.close.train_accuracy >= 0.95);
  const TaskRun b = prepare_task(data, train);
  CHECK(a.close.train_accuracy == b.close.train_accuracy);
  CHECK(a.close.epoch_losses == b.close.epoch_losses);
}

TEST_CASE("pseudo-label entropy of open samples tracks class spacing") {
  std::vector<double> small;
  std::vector<double> large;
  for (std::uint64_t seed : kSeeds) {
    small.push_back(prepare_task(task_data(seed, 0.5), task_training(seed)).hist.entropy);
    large.push_back(prepare_task(task_data(seed, 5.0), task_training(seed)).hist.entropy);
  }
  const double half_ln_k = 0.5 * std::log(6.0);
  MESSAGE("entropy at spacing 0.5: " << mean(small) << ", at 5.0: " << mean(large));
  CHECK(mean(small) > half_ln_k);
  CHECK(mean(large) < half_ln_k);
}

TEST_CASE("ground-truth labels on a clean pool are learned") {
  const TaskRun task = prepare_task(task_data(0), task_training(0));
  PseudoLabeledSet clean;
  clean.num_classes = 6;
  for (std::size_t i = 0; i < task.split.eval_pool.size(); ++i) {
    if (task.split.eval_is_open[i]) continue;
    clean.samples.push_back(task.split.eval_pool[i]);
    clean.pseudo_labels.push_back(task.split.eval_pool[i].label);
  }
  const CycleRun run = run_cycle_training(clean, task_backbone(32), task_training(0));
  double total = 0.0;
  for (const ScoreRecord& r : run.scores) total += r.score;
  const double mean_loss = total / static_cast<double>(run.scores.size());
  MESSAGE("final mean loss " << mean_loss);
  CHECK(mean_loss < std::log(6.0) / 4.0);
}

TEST_CASE("open samples score higher than close samples on average") {
  MESSAGE("mean score open " << average(&SeedRun::mean_open) << ", close "
                             << average(&SeedRun::mean_close));
  CHECK(average(&SeedRun::mean_open) > average(&SeedRun::mean_close));
}

TEST_CASE("selection keeps fewer open samples as training proceeds") {
  MESSAGE("open share of the clean mask at epoch 2: " << average(&SeedRun::open_kept_epoch2)
                                                      << ", epoch 10: "
                                                      << average(&SeedRun::open_kept_epoch10));
  CHECK(average(&SeedRun::open_kept_epoch10) < average(&SeedRun::open_kept_epoch2));
}

TEST_CASE("plain noisy training detects worse than the full method") {
  std::vector<double> plain;
  for (std::uint64_t seed : kSeeds) {
    TrainConfig train = task_training(seed);
    const TaskRun task = prepare_task(task_data(seed), train);
    train.lambda = 0.0;
    train.use_cyclic_lr = false;
    train.use_cycle_training = false;
    plain.push_back(detector_auroc(task, train));
  }
  MESSAGE("AUROC plain " << mean(plain) << ", full " << average(&SeedRun::full_auroc));
  CHECK(mean(plain) < average(&SeedRun::full_auroc));
}
