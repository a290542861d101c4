#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "osnd/cycle.hpp"
#include "osnd/errors.hpp"
#include "osnd/random.hpp"

using namespace osnd;

namespace {

PseudoLabeledSet random_pool(int n, int k, int size, std::uint64_t seed) {
  RandomStream rng(seed);
  PseudoLabeledSet pls;
  pls.num_classes = k;
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.id = "p" + std::to_string(i);
    s.image = Image(3, size, size);
    for (float& v : s.image.pixels) v = static_cast<float>(rng.uniform());
    pls.samples.push_back(s);
    pls.pseudo_labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
  }
  return pls;
}

BackboneConfig small_net() {
  BackboneConfig b;
  b.input_size = 8;
  b.stage_channels = {4, 8};
  return b;
}

TrainConfig quick(int epochs) {
  TrainConfig t;
  t.max_epochs = epochs;
  t.batch_size = 8;
  return t;
}

}  // namespace

TEST_CASE("cyclic learning rate") {
  TrainConfig cfg;
  CHECK(cyclic_learning_rate(0, cfg) == 0.0002);
  CHECK(cyclic_learning_rate(10, cfg) == 0.0002);
  CHECK(cyclic_learning_rate(30, cfg) == 0.0002);
  CHECK(cyclic_learning_rate(5, cfg) == doctest::Approx(1.1e-4).epsilon(1e-12));
  CHECK(cyclic_learning_rate(19, cfg) < cyclic_learning_rate(11, cfg));
  cfg.use_cyclic_lr = false;
  for (int e : {0, 3, 9, 27}) CHECK(cyclic_learning_rate(e, cfg) == 0.0002);
}

TEST_CASE("loss normalization") {
  CHECK(normalize_losses(std::vector<double>{1, 3}) == std::vector<double>{0, 1});
  CHECK(normalize_losses(std::vector<double>{2, 2, 2}) == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(normalize_losses(std::vector<double>{0, 1, 4}) == std::vector<double>{0, 0.25, 1});
}

TEST_CASE("gmm on two tight clusters") {
  std::vector<double> x(30, 0.05);
  x.insert(x.end(), 20, 0.95);
  const GmmFit fit = fit_loss_gmm(x);
  CHECK(std::abs(fit.means[static_cast<std::size_t>(fit.clean_component)] - 0.05) < 0.05);
  CHECK(std::abs(fit.means[static_cast<std::size_t>(1 - fit.clean_component)] - 0.95) < 0.05);
  for (std::size_t i = 0; i < 30; ++i) CHECK(fit.clean_posterior(i) > 0.9);
  for (const auto& row : fit.posteriors) CHECK(std::abs(row[0] + row[1] - 1.0) < 1e-9);
  const std::vector<bool> mask = select_clean(fit, 0.5);
  CHECK(std::count(mask.begin(), mask.begin() + 30, true) == 30);
  CHECK(std::count(mask.begin() + 30, mask.end(), true) == 0);
}

TEST_CASE("gmm weights on a symmetric mixture") {
  RandomStream rng(3);
  std::vector<double> x;
  for (int i = 0; i < 200; ++i) x.push_back(0.3 + 0.05 * rng.normal());
  for (int i = 0; i < 200; ++i) x.push_back(0.7 + 0.05 * rng.normal());
  const GmmFit fit = fit_loss_gmm(x);
  CHECK(std::abs(fit.weights[0] - 0.5) < 0.1);
  CHECK(std::abs(fit.weights[1] - 0.5) < 0.1);
}

TEST_CASE("gmm on identical losses") {
  const GmmFit fit = fit_loss_gmm(std::vector<double>(10, 0.5));
  for (std::size_t i = 0; i < 10; ++i) CHECK(fit.clean_posterior(i) == doctest::Approx(0.5));
  for (double v : fit.variances) CHECK(v >= kGmmVarianceFloor);
  CHECK_THROWS_AS(fit_loss_gmm(std::vector<double>{0.1, 0.2, 0.3}), TooFewSamples);
}

TEST_CASE("clean selection threshold is strict") {
  GmmFit fit;
  fit.clean_component = 0;
  fit.posteriors = {{0.9, 0.1}, {0.5, 0.5}, {0.2, 0.8}};
  CHECK(select_clean(fit, 0.5) == std::vector<bool>{true, false, false});

  fit.posteriors = {{0.5, 0.5}, {0.1, 0.9}};
  bool fell_back = false;
  CHECK(select_clean(fit, 0.5, &fell_back) == std::vector<bool>{true, true});
  CHECK(fell_back);
}

TEST_CASE("warm-up then alternating epochs") {
  const PseudoLabeledSet pls = random_pool(24, 3, 8, 1);
  const TrainConfig cfg = quick(5);
  CycleState state = init_cycle_state(pls, small_net(), cfg);
  state = cycle_train_epoch(std::move(state), pls, cfg);
  // Epoch 0 trains both models on everything.
  REQUIRE(state.curve.size() == 2);
  CHECK(state.curve[0].model_id == 1);
  CHECK(state.curve[1].model_id == 2);
  std::vector<int> trained;
  for (int e = 1; e <= 4; ++e) {
    state = cycle_train_epoch(std::move(state), pls, cfg);
    trained.push_back(state.curve.back().model_id);
    CHECK(state.curve.back().epoch == e);
  }
  CHECK(trained == std::vector<int>{2, 1, 2, 1});
  CHECK(state.clean_mask_for_f1.size() == 24);
  CHECK(std::count(state.clean_mask_for_f1.begin(), state.clean_mask_for_f1.end(), true) > 0);
  CHECK_THROWS_AS(cycle_train_epoch(std::move(state), pls, cfg), ConfigError);
}

TEST_CASE("fresh state starts from full masks") {
  const PseudoLabeledSet pls = random_pool(10, 3, 8, 2);
  const CycleState state = init_cycle_state(pls, small_net(), quick(3));
  CHECK(std::all_of(state.clean_mask_for_f1.begin(), state.clean_mask_for_f1.end(), [](bool b) { return b; }));
  CHECK(std::all_of(state.clean_mask_for_f2.begin(), state.clean_mask_for_f2.end(), [](bool b) { return b; }));
  CHECK_FALSE(state.f1 == state.f2);
}

TEST_CASE("single epoch run scores the warm-up models") {
  const PseudoLabeledSet pls = random_pool(12, 3, 8, 3);
  const CycleRun run = run_cycle_training(pls, small_net(), quick(1));
  CHECK(run.scores.size() == 12);
  CHECK(run.state.epoch == 1);
}

TEST_CASE("single model mode trains f1 only") {
  const PseudoLabeledSet pls = random_pool(12, 3, 8, 4);
  TrainConfig cfg = quick(3);
  cfg.use_cycle_training = false;
  const CycleRun run = run_cycle_training(pls, small_net(), cfg);
  for (const CurveEntry& c : run.state.curve) CHECK(c.model_id == 1);
  for (const ScoreRecord& r : run.scores) CHECK(r.score == r.loss_f1);
}

TEST_CASE("cycle training is deterministic") {
  const PseudoLabeledSet pls = random_pool(16, 3, 8, 5);
  const CycleRun a = run_cycle_training(pls, small_net(), quick(3));
  const CycleRun b = run_cycle_training(pls, small_net(), quick(3));
  for (std::size_t i = 0; i < a.scores.size(); ++i) CHECK(a.scores[i].score == b.scores[i].score);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.gmm_threshold = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.max_epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.lr_init = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
