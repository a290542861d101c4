#pragma once

#include <span>

#include "osnd/model.hpp"

namespace osnd {

// How the per-map discrepancy in the consistency loss is measured.
enum class ConsistencyNorm {
  kFrobenius,     // ||M[n,k] - Flip(M~)[n,k]||_F per map (default)
  kSquaredError,  // sum of squared elementwise differences per map
};

template <typename T>
struct LossBundle {
  T cls = 0;
  T cons = 0;
  T total = 0;
  Vector<T> per_sample_cls;
};

// Entry i = -log softmax(logits.row(i))[labels[i]]. Throws IndexError for a
// label outside 0..K-1.
template <typename T>
Vector<T> per_sample_cls_loss(const Matrix<T>& logits, std::span<const int> labels);

template <typename T>
T cls_loss(const Matrix<T>& logits, std::span<const int> labels);

// (1 / (N*K*H*W)) * sum_{n,k} dist(M[n,k], Flip(M~)[n,k]).
// Throws ShapeMismatch when the two map tensors differ in shape.
template <typename T>
T consistency_loss(const AttentionMaps<T>& m, const AttentionMaps<T>& m_tilde,
                   ConsistencyNorm norm = ConsistencyNorm::kFrobenius);

template <typename T>
T total_loss(T cls, T cons, T lambda) {
  return cls + lambda * cons;
}

// dL/dlogits of the weighted mean classification loss
// sum_i w_i * loss_i / sum_i w_i. Empty weights means uniform.
template <typename T>
Matrix<T> cls_loss_gradient(const Matrix<T>& logits, std::span<const int> labels,
                            std::span<const T> weights = {});

// Gradients of consistency_loss with respect to both map tensors. A map
// pair with zero Frobenius distance gets the zero subgradient.
template <typename T>
void consistency_loss_gradient(const AttentionMaps<T>& m, const AttentionMaps<T>& m_tilde,
                               ConsistencyNorm norm, Matrix<T>& d_m, Matrix<T>& d_m_tilde);

}  // namespace osnd
