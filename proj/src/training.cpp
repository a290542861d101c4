#include "osnd/training.hpp"

#include <algorithm>
#include <cmath>

#include "osnd/errors.hpp"

namespace osnd {

void TrainConfig::validate() const {
  if (lr_init <= 0.0) throw ConfigError("lr_init must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (cycle_len < 1) throw ConfigError("cycle_len must be at least 1");
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (!(gmm_threshold > 0.0 && gmm_threshold < 1.0)) {
    throw ConfigError("gmm_threshold must lie in (0, 1)");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (close_epochs < 1) throw ConfigError("close_epochs must be at least 1");
  erase.validate();
}

template <typename T>
Adam<T>::Adam(std::size_t size, double weight_decay, double beta1, double beta2, double eps)
    : weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(size, T(0)), v_(size, T(0)) {}

template <typename T>
void Adam<T>::step(std::span<T> params, std::span<const T> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw ShapeMismatch("optimizer state does not match parameter count");
  }
  ++steps_;
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  const T b1 = static_cast<T>(beta1_);
  const T b2 = static_cast<T>(beta2_);
  const T step_size = static_cast<T>(lr / bias1);
  const T sqrt_bias2 = static_cast<T>(std::sqrt(bias2));
  const T wd = static_cast<T>(weight_decay_);
  const T eps = static_cast<T>(eps_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grad[i] + wd * params[i];
    m_[i] = b1 * m_[i] + (T(1) - b1) * g;
    v_[i] = b2 * v_[i] + (T(1) - b2) * g * g;
    params[i] -= step_size * m_[i] / (std::sqrt(v_[i]) / sqrt_bias2 + eps);
  }
}

template class Adam<float>;
template class Adam<double>;

template <typename T>
LossBundle<T> loss_and_gradient(const Network<T>& net, std::span<const Image> erased,
                                std::span<const Image> flipped, std::span<const int> labels,
                                std::span<const T> cls_weights, const StepOptions& options,
                                std::span<T> grad) {
  LossBundle<T> bundle;
  ForwardCache<T> cache;
  const ForwardOutput<T> out = forward(net, erased, &cache);
  bundle.per_sample_cls = per_sample_cls_loss(out.logits, labels);

  T weight_sum = 0;
  T weighted = 0;
  for (Eigen::Index i = 0; i < bundle.per_sample_cls.size(); ++i) {
    const T w = cls_weights.empty() ? T(1) : cls_weights[static_cast<std::size_t>(i)];
    weight_sum += w;
    weighted += w * bundle.per_sample_cls(i);
  }
  bundle.cls = weight_sum > T(0) ? weighted / weight_sum : T(0);
  const Matrix<T> d_logits = cls_loss_gradient(out.logits, labels, cls_weights);

  const bool with_cons = options.use_consistency && options.lambda > 0.0 && !flipped.empty();
  if (!with_cons) {
    backward<T>(net, cache, out, d_logits, nullptr, grad);
    bundle.total = bundle.cls;
    return bundle;
  }
  if (flipped.size() != erased.size()) throw ShapeMismatch("flipped batch size differs");

  ForwardCache<T> cache_tilde;
  const ForwardOutput<T> out_tilde = forward(net, flipped, &cache_tilde);
  const AttentionMaps<T> maps = compute_attention_maps(out);
  const AttentionMaps<T> maps_tilde = compute_attention_maps(out_tilde);
  const T lambda = static_cast<T>(options.lambda);
  bundle.cons = consistency_loss(maps, maps_tilde, options.norm);
  bundle.total = total_loss(bundle.cls, bundle.cons, lambda);

  Matrix<T> d_maps;
  Matrix<T> d_maps_tilde;
  consistency_loss_gradient(maps, maps_tilde, options.norm, d_maps, d_maps_tilde);
  d_maps *= lambda;
  d_maps_tilde *= lambda;
  backward<T>(net, cache, out, d_logits, &d_maps, grad);
  const Matrix<T> no_logit_grad = Matrix<T>::Zero(out_tilde.logits.rows(), out_tilde.logits.cols());
  backward<T>(net, cache_tilde, out_tilde, no_logit_grad, &d_maps_tilde, grad);
  return bundle;
}

template LossBundle<float> loss_and_gradient<float>(const Network<float>&,
                                                    std::span<const Image>,
                                                    std::span<const Image>,
                                                    std::span<const int>,
                                                    std::span<const float>,
                                                    const StepOptions&, std::span<float>);
template LossBundle<double> loss_and_gradient<double>(const Network<double>&,
                                                      std::span<const Image>,
                                                      std::span<const Image>,
                                                      std::span<const int>,
                                                      std::span<const double>,
                                                      const StepOptions&, std::span<double>);

EpochStats train_epoch(Network<float>& net, Adam<float>& opt, std::span<const Image> images,
                       std::span<const int> labels, std::vector<std::size_t> indices,
                       std::span<const bool> cls_mask, const TrainConfig& cfg,
                       const StepOptions& step, double lr, RandomStream& rng) {
  EpochStats stats;
  if (indices.empty()) return stats;
  rng.shuffle(indices);
  const bool with_cons = step.use_consistency && step.lambda > 0.0;
  std::vector<float> grad(net.num_parameters());
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

  for (std::size_t start = 0; start < indices.size(); start += batch) {
    const std::size_t stop = std::min(indices.size(), start + batch);
    std::vector<Image> erased;
    std::vector<Image> flipped;
    std::vector<int> batch_labels;
    std::vector<float> weights;
    for (std::size_t i = start; i < stop; ++i) {
      const std::size_t idx = indices[i];
      AugmentedPair pair = make_augmented_pair(images[idx], rng, cfg.erase);
      erased.push_back(std::move(pair.erased));
      if (with_cons) flipped.push_back(std::move(pair.flipped));
      batch_labels.push_back(labels[idx]);
      if (!cls_mask.empty()) weights.push_back(cls_mask[idx] ? 1.0f : 0.0f);
    }
    std::fill(grad.begin(), grad.end(), 0.0f);
    const LossBundle<float> bundle =
        loss_and_gradient<float>(net, erased, flipped, batch_labels, weights, step, grad);
    opt.step(net.parameters(), grad, lr);
    stats.cls += bundle.cls;
    stats.cons += bundle.cons;
    stats.total += bundle.total;
    ++stats.batches;
  }
  stats.cls /= stats.batches;
  stats.cons /= stats.batches;
  stats.total /= stats.batches;
  return stats;
}

Matrix<float> predict_logits(const Network<float>& net, std::span<const Image> images, int chunk) {
  Matrix<float> logits(static_cast<Eigen::Index>(images.size()), net.config().num_classes);
  for (std::size_t start = 0; start < images.size(); start += static_cast<std::size_t>(chunk)) {
    const std::size_t count = std::min(images.size() - start, static_cast<std::size_t>(chunk));
    const ForwardOutput<float> out = forward(net, images.subspan(start, count));
    logits.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count)) =
        out.logits;
  }
  return logits;
}

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXf>& row) {
  int best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k) {
    if (row(k) > row(best)) best = static_cast<int>(k);
  }
  return best;
}

std::vector<double> per_sample_losses(const Network<float>& net, std::span<const Image> images,
                                      std::span<const int> labels) {
  const Matrix<float> logits = predict_logits(net, images);
  const Vector<float> loss = per_sample_cls_loss(logits, labels);
  return std::vector<double>(loss.data(), loss.data() + loss.size());
}

}  // namespace osnd
