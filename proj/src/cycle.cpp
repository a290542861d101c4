#include "osnd/cycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "osnd/detect.hpp"
#include "osnd/errors.hpp"
#include "osnd/log.hpp"

namespace osnd {

double cyclic_learning_rate(int epoch, const TrainConfig& cfg) {
  if (!cfg.use_cyclic_lr) return cfg.lr_init;
  const int phase = epoch % cfg.cycle_len;
  return cfg.lr_init * (1.0 - 0.9 * static_cast<double>(phase) / cfg.cycle_len);
}

std::vector<double> normalize_losses(std::span<const double> losses) {
  std::vector<double> out(losses.begin(), losses.end());
  if (out.empty()) return out;
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& v : out) v = range > 0.0 ? (v - min) / range : 0.5;
  return out;
}

namespace {

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

GmmFit fit_loss_gmm(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) throw TooFewSamples("GMM fit needs at least 4 losses, got " + std::to_string(n));

  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : sorted) var += (v - mean) * (v - mean);
  var = std::max(var / static_cast<double>(n), kGmmVarianceFloor);

  GmmFit fit;
  fit.means = {percentile(sorted, 0.1), percentile(sorted, 0.9)};
  fit.variances = {var, var};
  fit.weights = {0.5, 0.5};
  fit.posteriors.assign(n, {0.5, 0.5});

  constexpr double kLog2Pi = 1.8378770664093453;
  double previous = -std::numeric_limits<double>::infinity();
  for (int iter = 0;; ++iter) {
    // E-step with the current parameters.
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::array<double, 2> logp{};
      for (int j = 0; j < 2; ++j) {
        const double d = x[i] - fit.means[j];
        logp[j] = std::log(fit.weights[j]) - 0.5 * (kLog2Pi + std::log(fit.variances[j])) -
                  d * d / (2.0 * fit.variances[j]);
      }
      const double peak = std::max(logp[0], logp[1]);
      const double lse = peak + std::log(std::exp(logp[0] - peak) + std::exp(logp[1] - peak));
      fit.posteriors[i] = {std::exp(logp[0] - lse), std::exp(logp[1] - lse)};
      ll += lse;
    }
    fit.log_likelihood = ll;
    fit.iterations = iter;
    if (std::abs(ll - previous) < 1e-6 || iter >= 100) break;
    previous = ll;

    // M-step.
    for (int j = 0; j < 2; ++j) {
      double mass = 0.0;
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        mass += fit.posteriors[i][j];
        sum += fit.posteriors[i][j] * x[i];
      }
      if (mass <= 0.0) continue;  // collapsed component keeps its parameters
      const double mu = sum / mass;
      double spread = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        spread += fit.posteriors[i][j] * (x[i] - mu) * (x[i] - mu);
      }
      fit.means[j] = mu;
      fit.variances[j] = std::max(spread / mass, kGmmVarianceFloor);
      fit.weights[j] = mass / static_cast<double>(n);
    }
    const double wsum = fit.weights[0] + fit.weights[1];
    fit.weights = {fit.weights[0] / wsum, fit.weights[1] / wsum};
  }
  fit.clean_component = fit.means[1] < fit.means[0] ? 1 : 0;
  return fit;
}

std::vector<bool> select_clean(const GmmFit& fit, double threshold, bool* fell_back) {
  std::vector<bool> mask(fit.posteriors.size());
  bool any = false;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = fit.clean_posterior(i) > threshold;
    any = any || mask[i];
  }
  if (fell_back) *fell_back = !any;
  if (!any) {
    log_warn("GMM selected no clean samples; falling back to the full pool");
    std::fill(mask.begin(), mask.end(), true);
  }
  return mask;
}

CycleState init_cycle_state(const PseudoLabeledSet& pls, BackboneConfig backbone,
                            const TrainConfig& cfg) {
  cfg.validate();
  if (pls.samples.size() != pls.pseudo_labels.size()) {
    throw ConfigError("pseudo-labeled set has mismatched lengths");
  }
  backbone.num_classes = pls.num_classes;
  BackboneConfig b1 = backbone;
  BackboneConfig b2 = backbone;
  b1.seed = RandomStream::derive(cfg.seed, "init_f1").next_u64();
  b2.seed = RandomStream::derive(cfg.seed, "init_f2").next_u64();
  CycleState state(init_backbone(b1), init_backbone(b2));
  state.opt1 = Adam<float>(state.f1.num_parameters(), cfg.weight_decay);
  state.opt2 = Adam<float>(state.f2.num_parameters(), cfg.weight_decay);
  state.clean_mask_for_f1.assign(pls.samples.size(), true);
  state.clean_mask_for_f2.assign(pls.samples.size(), true);
  state.single_model = !cfg.use_cycle_training;
  state.rng = RandomStream::derive(cfg.seed, "erase");
  return state;
}

CycleState cycle_train_epoch(CycleState state, const PseudoLabeledSet& pls,
                             const TrainConfig& cfg) {
  if (state.epoch >= cfg.max_epochs) {
    throw ConfigError("epoch " + std::to_string(state.epoch) + " is past max_epochs");
  }
  if (state.clean_mask_for_f1.size() != pls.samples.size()) {
    throw ConfigError("cycle state does not match the pseudo-labeled set");
  }
  const std::vector<Image> images = pls.images();
  const std::span<const int> labels = pls.pseudo_labels;
  const double lr = cyclic_learning_rate(state.epoch, cfg);
  const StepOptions step{cfg.lambda, cfg.use_consistency, cfg.cons_norm};

  auto train = [&](Network<float>& net, Adam<float>& opt, const std::vector<bool>& mask,
                   int id) {
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (cfg.cons_on_all || mask[i]) indices.push_back(i);
    }
    // std::vector<bool> has no contiguous storage; copy into a bool array.
    std::unique_ptr<bool[]> cls_mask;
    std::span<const bool> cls_view;
    if (cfg.cons_on_all) {
      cls_mask = std::make_unique<bool[]>(mask.size());
      for (std::size_t i = 0; i < mask.size(); ++i) cls_mask[i] = mask[i];
      cls_view = std::span<const bool>(cls_mask.get(), mask.size());
    }
    const EpochStats stats =
        train_epoch(net, opt, images, labels, std::move(indices), cls_view, cfg, step, lr, state.rng);
    state.curve.push_back({state.epoch, id, stats.cls, stats.cons, stats.total});
    std::vector<double> losses = per_sample_losses(net, images, labels);
    state.loss_history.push_back({state.epoch, id, losses});
    return losses;
  };
  auto refit = [&](const std::vector<double>& losses) {
    const GmmFit fit = fit_loss_gmm(normalize_losses(losses));
    bool fell_back = false;
    std::vector<bool> mask = select_clean(fit, cfg.gmm_threshold, &fell_back);
    if (fell_back) ++state.fallback_count;
    state.kept_fraction.push_back(static_cast<double>(std::count(mask.begin(), mask.end(), true)) /
                                  static_cast<double>(mask.size()));
    return mask;
  };

  if (state.single_model) {
    const std::vector<bool> mask = state.epoch == 0
                                       ? std::vector<bool>(pls.samples.size(), true)
                                       : state.clean_mask_for_f1;
    const auto losses = train(state.f1, state.opt1, mask, 1);
    state.clean_mask_for_f1 = refit(losses);
  } else if (state.epoch == 0) {
    const std::vector<bool> all(pls.samples.size(), true);
    const auto losses1 = train(state.f1, state.opt1, all, 1);
    const auto losses2 = train(state.f2, state.opt2, all, 2);
    state.clean_mask_for_f2 = refit(losses1);
    state.clean_mask_for_f1 = refit(losses2);
  } else if (state.epoch % 2 == 1) {
    const auto losses = train(state.f2, state.opt2, state.clean_mask_for_f2, 2);
    state.clean_mask_for_f1 = refit(losses);
  } else {
    const auto losses = train(state.f1, state.opt1, state.clean_mask_for_f1, 1);
    state.clean_mask_for_f2 = refit(losses);
  }
  ++state.epoch;
  return state;
}

CycleRun run_cycle_training(const PseudoLabeledSet& pls, const BackboneConfig& backbone,
                            const TrainConfig& cfg, const EpochObserver& observer) {
  CycleState state = init_cycle_state(pls, backbone, cfg);
  while (state.epoch < cfg.max_epochs) {
    state = cycle_train_epoch(std::move(state), pls, cfg);
    if (observer) observer(state);
  }
  CycleRun run{std::move(state), {}};
  run.scores = score_offline(run.state, pls);
  return run;
}

}  // namespace osnd
