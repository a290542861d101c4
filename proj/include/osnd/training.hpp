#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "osnd/augment.hpp"
#include "osnd/losses.hpp"
#include "osnd/model.hpp"
#include "osnd/random.hpp"

namespace osnd {

struct TrainConfig {
  double lr_init = 2e-4;
  double weight_decay = 1e-4;
  int max_epochs = 40;  // Tmax for cycle training
  int cycle_len = 10;
  double lambda = 5.0;
  double gmm_threshold = 0.5;
  int batch_size = 16;
  std::uint64_t seed = 0;

  bool use_consistency = true;
  bool use_cyclic_lr = true;
  bool use_cycle_training = true;
  // Unselected samples still contribute to the consistency term.
  bool cons_on_all = false;
  ConsistencyNorm cons_norm = ConsistencyNorm::kFrobenius;
  EraseConfig erase;

  // Close-set model.
  int close_epochs = 20;
  bool close_augment = false;  // random horizontal flips while training f_close

  void validate() const;
};

// Adam with L2 weight decay folded into the gradient (g += wd * p).
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void step(std::span<T> params, std::span<const T> grad, double lr);
  long steps() const { return steps_; }

 private:
  double weight_decay_ = 0.0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long steps_ = 0;
  std::vector<T> m_;
  std::vector<T> v_;
};

struct StepOptions {
  double lambda = 5.0;
  bool use_consistency = true;
  ConsistencyNorm norm = ConsistencyNorm::kFrobenius;
};

// Loss of one batch and its gradient, accumulated into `grad`. Only the
// erased images feed the classification term; the flipped copies enter the
// consistency term alone. `cls_weights` (optional, 0/1) removes samples from
// the classification mean while keeping them in the consistency term.
template <typename T>
LossBundle<T> loss_and_gradient(const Network<T>& net, std::span<const Image> erased,
                                std::span<const Image> flipped, std::span<const int> labels,
                                std::span<const T> cls_weights, const StepOptions& options,
                                std::span<T> grad);

struct EpochStats {
  double cls = 0.0;
  double cons = 0.0;
  double total = 0.0;
  int batches = 0;
};

// One pass over `indices` (shuffled with `rng`) in minibatches, applying
// random erasing + flip pairs and an optimizer step per batch.
// `cls_mask`, if nonempty, is indexed like `images`.
EpochStats train_epoch(Network<float>& net, Adam<float>& opt, std::span<const Image> images,
                       std::span<const int> labels, std::vector<std::size_t> indices,
                       std::span<const bool> cls_mask, const TrainConfig& cfg,
                       const StepOptions& step, double lr, RandomStream& rng);

// Clean (un-augmented) inference in fixed-size chunks.
Matrix<float> predict_logits(const Network<float>& net, std::span<const Image> images,
                             int chunk = 64);

// Argmax with ties broken by the lowest class index.
int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXf>& row);

std::vector<double> per_sample_losses(const Network<float>& net, std::span<const Image> images,
                                      std::span<const int> labels);

}  // namespace osnd
