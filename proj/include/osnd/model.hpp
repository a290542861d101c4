#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "osnd/image.hpp"

namespace osnd {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct BackboneConfig {
  int input_size = 32;  // square input side
  int input_channels = 3;
  std::vector<int> stage_channels{16, 32, 64};
  int num_classes = 7;
  std::uint64_t seed = 0;

  int feature_dim() const { return stage_channels.empty() ? 0 : stage_channels.back(); }
  // Spatial side of the last conv stage (every stage is 3x3, stride 2, pad 1).
  int feature_size() const;
  void validate() const;
};

// Named slice of the flat parameter vector.
struct TensorSpec {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Conv trunk (3x3 stride-2 conv + ReLU per stage) -> global average pooling
// -> one fully-connected layer. All parameters live in one flat vector so
// optimizers, gradients and checkpoints share a single layout.
template <typename T>
class Network {
 public:
  using MatrixMap = Eigen::Map<Matrix<T>>;
  using ConstMatrixMap = Eigen::Map<const Matrix<T>>;
  using VectorMap = Eigen::Map<Vector<T>>;
  using ConstVectorMap = Eigen::Map<const Vector<T>>;

  // Zero-initialized parameters.
  explicit Network(BackboneConfig cfg);

  const BackboneConfig& config() const { return cfg_; }
  const std::vector<TensorSpec>& layout() const { return layout_; }
  std::span<T> parameters() { return params_; }
  std::span<const T> parameters() const { return params_; }
  std::size_t num_parameters() const { return params_.size(); }
  int num_stages() const { return static_cast<int>(cfg_.stage_channels.size()); }

  // out_channels x (9 * in_channels); column index = tap * in_channels + c,
  // tap = ky * 3 + kx.
  MatrixMap conv_weight(int stage);
  ConstMatrixMap conv_weight(int stage) const;
  VectorMap conv_bias(int stage);
  ConstVectorMap conv_bias(int stage) const;
  MatrixMap fc_weight();  // K x C_feat
  ConstMatrixMap fc_weight() const;
  VectorMap fc_bias();
  ConstVectorMap fc_bias() const;

  template <typename U>
  Network<U> cast() const {
    Network<U> out(cfg_);
    auto dst = out.parameters();
    for (std::size_t i = 0; i < params_.size(); ++i) dst[i] = static_cast<U>(params_[i]);
    return out;
  }

  friend bool operator==(const Network& a, const Network& b) {
    return a.params_ == b.params_;
  }

 private:
  const TensorSpec& spec(std::size_t index) const { return layout_[index]; }

  BackboneConfig cfg_;
  std::vector<TensorSpec> layout_;
  std::vector<T> params_;
};

// He-normal conv weights, scaled-normal FC weights, zero biases; a pure
// function of cfg (including cfg.seed).
Network<float> init_backbone(const BackboneConfig& cfg);

template <typename T>
struct ForwardOutput {
  Matrix<T> logits;      // N x K
  Matrix<T> features;    // C_feat x (N * H' * W'); column (n * H' + h) * W' + w
  Matrix<T> fc_weights;  // K x C_feat
  Vector<T> fc_bias;     // K
  int batch = 0;
  int height = 0;  // H'
  int width = 0;   // W'

  T feature(int n, int c, int h, int w) const {
    return features(c, (static_cast<Eigen::Index>(n) * height + h) * width + w);
  }
};

// Intermediate activations kept for backpropagation.
template <typename T>
struct ForwardCache {
  std::vector<Matrix<T>> columns;      // im2col input of each stage
  std::vector<Matrix<T>> activations;  // post-ReLU output of each stage
  Matrix<T> pooled;                    // C_feat x N
  int batch = 0;
};

// Throws ShapeMismatch when an image does not match the configured input.
template <typename T>
ForwardOutput<T> forward(const Network<T>& net, std::span<const Image> batch,
                         ForwardCache<T>* cache = nullptr);

template <typename T>
struct AttentionMaps {
  Matrix<T> maps;  // K x (N * H' * W'), same column order as features
  int batch = 0;
  int height = 0;
  int width = 0;

  int classes() const { return static_cast<int>(maps.rows()); }
  T at(int n, int k, int h, int w) const {
    return maps(k, (static_cast<Eigen::Index>(n) * height + h) * width + w);
  }
  T& at(int n, int k, int h, int w) {
    return maps(k, (static_cast<Eigen::Index>(n) * height + h) * width + w);
  }
};

// Raw class activation maps: maps[n,k] = sum_c W[k,c] * features[n,c]. The
// FC bias is not included.
template <typename T>
AttentionMaps<T> compute_attention_maps(const ForwardOutput<T>& out);

// Reverses the width axis of every map.
template <typename T>
AttentionMaps<T> flip_attention_maps(const AttentionMaps<T>& m);

// Accumulates parameter gradients into `grad` (same layout as parameters)
// given dL/dlogits (N x K) and optionally dL/dmaps (K x N*H'*W').
template <typename T>
void backward(const Network<T>& net, const ForwardCache<T>& cache,
              const ForwardOutput<T>& out, const Matrix<T>& d_logits,
              const Matrix<T>* d_maps, std::span<T> grad);

// Content hash of the parameters, hex encoded.
std::string model_id(const Network<float>& net);

}  // namespace osnd
