#include "osnd/losses.hpp"

#include <cmath>

#include "osnd/errors.hpp"

namespace osnd {

namespace {

void check_labels(const Eigen::Index rows, const Eigen::Index classes,
                  std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw ShapeMismatch("labels length does not match logits rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw IndexError("label " + std::to_string(y) + " outside 0.." +
                       std::to_string(classes - 1));
    }
  }
}

template <typename T>
void check_same_shape(const AttentionMaps<T>& a, const AttentionMaps<T>& b) {
  if (a.maps.rows() != b.maps.rows() || a.maps.cols() != b.maps.cols() ||
      a.batch != b.batch || a.height != b.height || a.width != b.width) {
    throw ShapeMismatch("attention maps differ in shape");
  }
}

// Per-map difference D = M - Flip(M~), laid out like the maps.
template <typename T>
Matrix<T> flipped_difference(const AttentionMaps<T>& m, const AttentionMaps<T>& m_tilde) {
  return m.maps - flip_attention_maps(m_tilde).maps;
}

}  // namespace

template <typename T>
Vector<T> per_sample_cls_loss(const Matrix<T>& logits, std::span<const int> labels) {
  check_labels(logits.rows(), logits.cols(), labels);
  Vector<T> loss(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index top = 0;
    const T peak = logits.row(i).maxCoeff(&top);
    // log-sum-exp = peak + log1p(sum of the non-peak terms)
    T rest = 0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      if (k != top) rest += std::exp(logits(i, k) - peak);
    }
    const T value = (peak - logits(i, labels[static_cast<std::size_t>(i)])) + std::log1p(rest);
    loss(i) = value < T(0) ? T(0) : value;
  }
  return loss;
}

template <typename T>
T cls_loss(const Matrix<T>& logits, std::span<const int> labels) {
  const Vector<T> per = per_sample_cls_loss(logits, labels);
  if (per.size() == 0) return T(0);
  return per.mean();
}

template <typename T>
T consistency_loss(const AttentionMaps<T>& m, const AttentionMaps<T>& m_tilde,
                   ConsistencyNorm norm) {
  check_same_shape(m, m_tilde);
  const Matrix<T> diff = flipped_difference(m, m_tilde);
  const Eigen::Index area = static_cast<Eigen::Index>(m.height) * m.width;
  const T denom = static_cast<T>(m.batch) * static_cast<T>(m.classes()) * static_cast<T>(area);
  if (denom == T(0)) return T(0);
  T sum = 0;
  for (int n = 0; n < m.batch; ++n) {
    const auto block = diff.middleCols(n * area, area);
    for (Eigen::Index k = 0; k < diff.rows(); ++k) {
      const T sq = block.row(k).squaredNorm();
      sum += norm == ConsistencyNorm::kFrobenius ? std::sqrt(sq) : sq;
    }
  }
  return sum / denom;
}

template <typename T>
Matrix<T> cls_loss_gradient(const Matrix<T>& logits, std::span<const int> labels,
                            std::span<const T> weights) {
  check_labels(logits.rows(), logits.cols(), labels);
  const Eigen::Index n = logits.rows();
  if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != n) {
    throw ShapeMismatch("weights length does not match logits rows");
  }
  T weight_sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    weight_sum += weights.empty() ? T(1) : weights[static_cast<std::size_t>(i)];
  }
  Matrix<T> grad = Matrix<T>::Zero(n, logits.cols());
  if (weight_sum <= T(0)) return grad;
  for (Eigen::Index i = 0; i < n; ++i) {
    const T w = weights.empty() ? T(1) : weights[static_cast<std::size_t>(i)];
    if (w == T(0)) continue;
    const T peak = logits.row(i).maxCoeff();
    Vector<T> p = (logits.row(i).array() - peak).exp().transpose();
    p /= p.sum();
    p(labels[static_cast<std::size_t>(i)]) -= T(1);
    grad.row(i) = (w / weight_sum) * p.transpose();
  }
  return grad;
}

template <typename T>
void consistency_loss_gradient(const AttentionMaps<T>& m, const AttentionMaps<T>& m_tilde,
                               ConsistencyNorm norm, Matrix<T>& d_m, Matrix<T>& d_m_tilde) {
  check_same_shape(m, m_tilde);
  const Matrix<T> diff = flipped_difference(m, m_tilde);
  const Eigen::Index area = static_cast<Eigen::Index>(m.height) * m.width;
  const T denom = static_cast<T>(m.batch) * static_cast<T>(m.classes()) * static_cast<T>(area);
  d_m = Matrix<T>::Zero(diff.rows(), diff.cols());
  if (denom == T(0)) {
    d_m_tilde = d_m;
    return;
  }
  for (int n = 0; n < m.batch; ++n) {
    for (Eigen::Index k = 0; k < diff.rows(); ++k) {
      const auto row = diff.block(k, n * area, 1, area);
      if (norm == ConsistencyNorm::kFrobenius) {
        const T len = row.norm();
        if (len > T(0)) d_m.block(k, n * area, 1, area) = row / (len * denom);
      } else {
        d_m.block(k, n * area, 1, area) = row * (T(2) / denom);
      }
    }
  }
  // D = M - Flip(M~), so dL/dM~ = -Flip(dL/dD).
  AttentionMaps<T> shaped = m;
  shaped.maps = d_m;
  d_m_tilde = -flip_attention_maps(shaped).maps;
}

#define OSND_INSTANTIATE(T)                                                               \
  template Vector<T> per_sample_cls_loss<T>(const Matrix<T>&, std::span<const int>);      \
  template T cls_loss<T>(const Matrix<T>&, std::span<const int>);                         \
  template T consistency_loss<T>(const AttentionMaps<T>&, const AttentionMaps<T>&,        \
                                 ConsistencyNorm);                                        \
  template Matrix<T> cls_loss_gradient<T>(const Matrix<T>&, std::span<const int>,         \
                                          std::span<const T>);                            \
  template void consistency_loss_gradient<T>(const AttentionMaps<T>&,                     \
                                             const AttentionMaps<T>&, ConsistencyNorm,    \
                                             Matrix<T>&, Matrix<T>&);

OSND_INSTANTIATE(float)
OSND_INSTANTIATE(double)

#undef OSND_INSTANTIATE

}  // namespace osnd
