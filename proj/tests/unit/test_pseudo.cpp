#include <doctest.h>

#include <cmath>

#include "osnd/errors.hpp"
#include "osnd/pseudo.hpp"

using namespace osnd;

namespace {

// Zero conv weights leave the features at zero, so every image gets the
// FC bias as its logits.
Network<float> constant_logits(const std::vector<float>& logits) {
  BackboneConfig cfg;
  cfg.input_size = 4;
  cfg.stage_channels = {2};
  cfg.num_classes = static_cast<int>(logits.size());
  Network<float> net(cfg);
  for (std::size_t k = 0; k < logits.size(); ++k) net.fc_bias()(static_cast<Eigen::Index>(k)) = logits[k];
  return net;
}

std::vector<Sample> pool(int n) {
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.id = "s" + std::to_string(i);
    s.image = Image(3, 4, 4, 0.5f);
    out.push_back(s);
  }
  return out;
}

PseudoLabeledSet labeled(const std::vector<int>& labels, int k) {
  PseudoLabeledSet pls;
  pls.samples = pool(static_cast<int>(labels.size()));
  pls.pseudo_labels = labels;
  pls.num_classes = k;
  return pls;
}

}  // namespace

TEST_CASE("pseudo label is the argmax") {
  const auto pls = assign_pseudo_labels(constant_logits({5, 1, 0, 0}), pool(3),
                                        {false, true, false}, PseudoMode::model());
  CHECK(pls.pseudo_labels == std::vector<int>{0, 0, 0});
  CHECK(pls.num_classes == 4);
  CHECK(pls.mode.name() == "model");
  CHECK_FALSE(pls.close_model_id.empty());
}

TEST_CASE("ties go to the lowest class") {
  const auto pls =
      assign_pseudo_labels(constant_logits({2, 2, 0}), pool(2), {false, false}, PseudoMode::model());
  CHECK(pls.pseudo_labels == std::vector<int>{0, 0});
}

TEST_CASE("fixed class only rewrites latent-open samples") {
  const auto pls = assign_pseudo_labels(constant_logits({0, 4, 1, 0, 0}), pool(4),
                                        {true, false, true, false}, PseudoMode::fixed(3));
  CHECK(pls.pseudo_labels == std::vector<int>{3, 1, 3, 1});
  CHECK(pls.mode.name() == "fixed_class(3)");
}

TEST_CASE("histogram entropy") {
  const std::vector<bool> all_open(4, true);
  const PseudoHistogram degenerate = pseudo_label_histogram(labeled({2, 2, 2, 2}, 4), all_open);
  CHECK(degenerate.counts == std::vector<int>{0, 0, 4, 0});
  CHECK(degenerate.entropy == 0.0);

  const PseudoHistogram uniform =
      pseudo_label_histogram(labeled({0, 1, 2, 3, 4, 5}, 6), std::vector<bool>(6, true));
  CHECK(uniform.entropy == doctest::Approx(std::log(6.0)));

  CHECK(count_entropy({3, 1, 0, 0}) == doctest::Approx(0.5623351446188083));
}

TEST_CASE("histogram counts latent-open samples only") {
  const PseudoHistogram h =
      pseudo_label_histogram(labeled({0, 1, 1, 2, 1}, 3), {true, false, true, true, false});
  CHECK(h.counts == std::vector<int>{1, 1, 1});
  CHECK(most_populated_class(h) == 0);
  CHECK(most_populated_class(pseudo_label_histogram(labeled({2, 1, 2}, 3), {true, true, true})) == 2);
}

TEST_CASE("training needs close samples") {
  OpenSplit empty;
  BackboneConfig cfg;
  CHECK_THROWS_AS(train_close_model(empty, cfg, TrainConfig{}), ConfigError);
}
