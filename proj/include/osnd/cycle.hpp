#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "osnd/model.hpp"
#include "osnd/pseudo.hpp"
#include "osnd/score.hpp"
#include "osnd/training.hpp"

namespace osnd {

// eta * (1 - 0.9 * (epoch mod cycle_len) / cycle_len): resets to eta at the
// start of every cycle and decays linearly towards 0.1 * eta. Constant eta
// when use_cyclic_lr is off.
double cyclic_learning_rate(int epoch, const TrainConfig& cfg);

// Min-max scaling to [0, 1]; constant input maps to 0.5 everywhere.
std::vector<double> normalize_losses(std::span<const double> losses);

struct GmmFit {
  std::array<double, 2> means{};
  std::array<double, 2> variances{};
  std::array<double, 2> weights{};
  std::vector<std::array<double, 2>> posteriors;  // one row per sample
  int clean_component = 0;  // lower mean; index 0 on ties
  int iterations = 0;
  double log_likelihood = 0.0;

  double clean_posterior(std::size_t i) const {
    return posteriors[i][static_cast<std::size_t>(clean_component)];
  }
};

inline constexpr double kGmmVarianceFloor = 1e-6;

// Two-component 1-D EM. Means start at the 10th/90th percentiles, variances
// at the pooled variance; stops when the log-likelihood gain drops below
// 1e-6 or after 100 iterations. Throws TooFewSamples for fewer than 4 values.
GmmFit fit_loss_gmm(std::span<const double> norm_losses);

// mask[i] = clean posterior > threshold. An all-false mask is replaced by an
// all-true one and a warning is logged; `fell_back` reports that case.
std::vector<bool> select_clean(const GmmFit& fit, double threshold, bool* fell_back = nullptr);

struct LossHistoryEntry {
  int epoch = 0;
  int model_id = 1;  // 1 or 2
  std::vector<double> losses;  // clean per-sample loss after the epoch
};

struct CurveEntry {
  int epoch = 0;
  int model_id = 1;
  double cls = 0.0;
  double cons = 0.0;
  double total = 0.0;
};

struct CycleState {
  CycleState(Network<float> first, Network<float> second)
      : f1(std::move(first)), f2(std::move(second)) {}

  Network<float> f1;
  Network<float> f2;
  Adam<float> opt1;
  Adam<float> opt2;
  int epoch = 0;
  std::vector<bool> clean_mask_for_f1;
  std::vector<bool> clean_mask_for_f2;
  std::vector<LossHistoryEntry> loss_history;
  std::vector<CurveEntry> curve;
  // Selection statistics, one entry per refit: fraction of the pool kept.
  std::vector<double> kept_fraction;
  int fallback_count = 0;
  // When cycle training is off only f1 is trained and scored.
  bool single_model = false;
  RandomStream rng{0};
};

// Fresh f1/f2 (seeds from the "init_f1"/"init_f2" substreams) and all-true
// masks sized to the pool.
CycleState init_cycle_state(const PseudoLabeledSet& pls, BackboneConfig backbone,
                            const TrainConfig& cfg);

// Epoch 0 trains both models on every sample. Later epochs alternate: odd
// epochs train f2 on clean_mask_for_f2, even epochs train f1 on
// clean_mask_for_f1. After training, the trained model's clean losses over
// the full pool are refit with a GMM to produce the other model's mask.
CycleState cycle_train_epoch(CycleState state, const PseudoLabeledSet& pls,
                             const TrainConfig& cfg);

struct CycleRun {
  CycleState state;
  std::vector<ScoreRecord> scores;
};

using EpochObserver = std::function<void(const CycleState&)>;

// Runs cfg.max_epochs epochs from a fresh state and scores the pool.
CycleRun run_cycle_training(const PseudoLabeledSet& pls, const BackboneConfig& backbone,
                            const TrainConfig& cfg, const EpochObserver& observer = {});

}  // namespace osnd
