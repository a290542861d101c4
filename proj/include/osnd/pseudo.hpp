#pragma once

#include <string>
#include <vector>

#include "osnd/dataset.hpp"
#include "osnd/model.hpp"
#include "osnd/training.hpp"

namespace osnd {

struct CloseModel {
  Network<float> model;
  double train_accuracy = 0.0;
  std::vector<double> epoch_losses;  // mean batch cross-entropy per epoch
};

// Cross-entropy-only training of the close-set classifier on
// split.close_train. backbone.num_classes is overridden with K.
CloseModel train_close_model(const OpenSplit& split, BackboneConfig backbone,
                             const TrainConfig& cfg);

enum class PseudoSource { kModel, kFixedClass };

struct PseudoMode {
  PseudoSource source = PseudoSource::kModel;
  int fixed_class = 0;

  static PseudoMode model() { return {}; }
  static PseudoMode fixed(int k) { return {PseudoSource::kFixedClass, k}; }
  std::string name() const;  // "model" or "fixed_class(k)"
};

struct PseudoLabeledSet {
  std::vector<Sample> samples;  // eval-pool order
  std::vector<int> pseudo_labels;
  PseudoMode mode;
  std::string close_model_id;
  int num_classes = 0;

  std::vector<Image> images() const;
};

// mode=model: argmax (lowest index on ties) of the close model on clean
// images. mode=fixed(k): as model, then every latent-open sample is forced
// to k, so `is_open` is only read in that mode.
PseudoLabeledSet assign_pseudo_labels(const Network<float>& close_model,
                                      const std::vector<Sample>& pool,
                                      const std::vector<bool>& is_open, PseudoMode mode);

struct PseudoHistogram {
  std::vector<int> counts;  // K entries, latent-open samples only
  double entropy = 0.0;     // natural log
};

PseudoHistogram pseudo_label_histogram(const PseudoLabeledSet& pls,
                                       const std::vector<bool>& is_open);

// Entropy (nats) of a count vector, with 0 log 0 = 0.
double count_entropy(const std::vector<int>& counts);

// Index of the most populated class in the histogram (lowest on ties).
int most_populated_class(const PseudoHistogram& hist);

}  // namespace osnd
