#include "osnd/pseudo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "osnd/errors.hpp"

namespace osnd {

CloseModel train_close_model(const OpenSplit& split, BackboneConfig backbone,
                             const TrainConfig& cfg) {
  cfg.validate();
  if (split.close_train.empty()) throw ConfigError("close_train is empty");
  std::vector<bool> present(static_cast<std::size_t>(split.num_close_classes()), false);
  for (const Sample& s : split.close_train) present[static_cast<std::size_t>(s.label)] = true;
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw ConfigError("close_train must contain at least 2 classes");
  }

  backbone.num_classes = split.num_close_classes();
  backbone.seed = RandomStream::derive(cfg.seed, "init_close").next_u64();
  CloseModel result{init_backbone(backbone), 0.0, {}};
  Adam<float> opt(result.model.num_parameters(), cfg.weight_decay);
  RandomStream rng = RandomStream::derive(cfg.seed, "close_train");

  std::vector<Image> images;
  std::vector<int> labels;
  for (const Sample& s : split.close_train) {
    images.push_back(s.image);
    labels.push_back(s.label);
  }
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const StepOptions step{0.0, false, cfg.cons_norm};
  TrainConfig plain = cfg;
  // Erasing is a detector-training augmentation; the close model sees clean
  // images, optionally flipped.
  plain.erase.probability = 0.0;
  for (int epoch = 0; epoch < cfg.close_epochs; ++epoch) {
    std::vector<Image> epoch_images;
    std::span<const Image> view = images;
    if (cfg.close_augment) {
      epoch_images.reserve(images.size());
      for (const Image& img : images) {
        epoch_images.push_back(rng.uniform() < 0.5 ? horizontal_flip(img) : img);
      }
      view = epoch_images;
    }
    const EpochStats stats =
        train_epoch(result.model, opt, view, labels, order, {}, plain, step, cfg.lr_init, rng);
    result.epoch_losses.push_back(stats.cls);
  }

  const Matrix<float> logits = predict_logits(result.model, images);
  int correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (argmax_lowest(logits.row(i)) == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  result.train_accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  return result;
}

std::string PseudoMode::name() const {
  if (source == PseudoSource::kModel) return "model";
  return "fixed_class(" + std::to_string(fixed_class) + ")";
}

std::vector<Image> PseudoLabeledSet::images() const {
  std::vector<Image> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(s.image);
  return out;
}

PseudoLabeledSet assign_pseudo_labels(const Network<float>& close_model,
                                      const std::vector<Sample>& pool,
                                      const std::vector<bool>& is_open, PseudoMode mode) {
  const int k = close_model.config().num_classes;
  if (mode.source == PseudoSource::kFixedClass) {
    if (mode.fixed_class < 0 || mode.fixed_class >= k) {
      throw ConfigError("fixed pseudo class " + std::to_string(mode.fixed_class) +
                        " outside 0.." + std::to_string(k - 1));
    }
    if (is_open.size() != pool.size()) {
      throw ConfigError("fixed_class mode needs one truth flag per pool sample");
    }
  }
  PseudoLabeledSet pls;
  pls.samples = pool;
  pls.mode = mode;
  pls.close_model_id = model_id(close_model);
  pls.num_classes = k;

  const std::vector<Image> images = pls.images();
  const Matrix<float> logits = predict_logits(close_model, images);
  pls.pseudo_labels.resize(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pls.pseudo_labels[i] = argmax_lowest(logits.row(static_cast<Eigen::Index>(i)));
    if (mode.source == PseudoSource::kFixedClass && is_open[i]) {
      pls.pseudo_labels[i] = mode.fixed_class;
    }
  }
  return pls;
}

double count_entropy(const std::vector<int>& counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (int c : counts) {
    if (c <= 0) continue;
    const double p = c / total;
    h -= p * std::log(p);
  }
  return h;
}

PseudoHistogram pseudo_label_histogram(const PseudoLabeledSet& pls,
                                       const std::vector<bool>& is_open) {
  if (is_open.size() != pls.pseudo_labels.size()) {
    throw ConfigError("truth flags do not match the pseudo-labeled set");
  }
  PseudoHistogram hist;
  hist.counts.assign(static_cast<std::size_t>(pls.num_classes), 0);
  int open = 0;
  for (std::size_t i = 0; i < is_open.size(); ++i) {
    if (!is_open[i]) continue;
    ++hist.counts[static_cast<std::size_t>(pls.pseudo_labels[i])];
    ++open;
  }
  if (open == 0) throw EmptyAnalysis("no open-set samples in the pool");
  hist.entropy = count_entropy(hist.counts);
  return hist;
}

int most_populated_class(const PseudoHistogram& hist) {
  int best = 0;
  for (std::size_t k = 1; k < hist.counts.size(); ++k) {
    if (hist.counts[k] > hist.counts[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

}  // namespace osnd
