#include "osnd/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

#include "osnd/errors.hpp"
#include "osnd/random.hpp"

namespace osnd {

namespace {

int conv_out(int size) { return (size - 1) / 2 + 1; }

template <typename T>
Matrix<T> images_to_matrix(std::span<const Image> batch, const BackboneConfig& cfg) {
  const int side = cfg.input_size;
  const Eigen::Index pixels = static_cast<Eigen::Index>(side) * side;
  Matrix<T> x(cfg.input_channels, static_cast<Eigen::Index>(batch.size()) * pixels);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const Image& img = batch[n];
    if (img.channels != cfg.input_channels || img.height != side || img.width != side) {
      throw ShapeMismatch("input image is " + std::to_string(img.channels) + "x" +
                          std::to_string(img.height) + "x" + std::to_string(img.width) +
                          ", network expects " + std::to_string(cfg.input_channels) + "x" +
                          std::to_string(side) + "x" + std::to_string(side));
    }
    for (int c = 0; c < img.channels; ++c) {
      const float* plane = img.pixels.data() + static_cast<std::size_t>(c) * pixels;
      for (Eigen::Index p = 0; p < pixels; ++p) {
        x(c, static_cast<Eigen::Index>(n) * pixels + p) = static_cast<T>((plane[p] - 0.5f) * 4.0f);
      }
    }
  }
  return x;
}

// 3x3 taps, stride 2, zero padding 1.
template <typename T>
Matrix<T> im2col(const Matrix<T>& x, int channels, int batch, int h, int w) {
  const int ho = conv_out(h);
  const int wo = conv_out(w);
  Matrix<T> col = Matrix<T>::Zero(9 * channels, static_cast<Eigen::Index>(batch) * ho * wo);
  for (int n = 0; n < batch; ++n) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        const Eigen::Index j = (static_cast<Eigen::Index>(n) * ho + oy) * wo + ox;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = 2 * ox - 1 + kx;
            if (ix < 0 || ix >= w) continue;
            const Eigen::Index src = (static_cast<Eigen::Index>(n) * h + iy) * w + ix;
            col.block((ky * 3 + kx) * channels, j, channels, 1) = x.col(src);
          }
        }
      }
    }
  }
  return col;
}

template <typename T>
Matrix<T> col2im(const Matrix<T>& col, int channels, int batch, int h, int w) {
  const int ho = conv_out(h);
  const int wo = conv_out(w);
  Matrix<T> x = Matrix<T>::Zero(channels, static_cast<Eigen::Index>(batch) * h * w);
  for (int n = 0; n < batch; ++n) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        const Eigen::Index j = (static_cast<Eigen::Index>(n) * ho + oy) * wo + ox;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = 2 * ox - 1 + kx;
            if (ix < 0 || ix >= w) continue;
            const Eigen::Index dst = (static_cast<Eigen::Index>(n) * h + iy) * w + ix;
            x.col(dst) += col.block((ky * 3 + kx) * channels, j, channels, 1);
          }
        }
      }
    }
  }
  return x;
}

}  // namespace

int BackboneConfig::feature_size() const {
  int side = input_size;
  for (std::size_t i = 0; i < stage_channels.size(); ++i) side = conv_out(side);
  return side;
}

void BackboneConfig::validate() const {
  if (input_size < 1) throw ConfigError("input_size must be positive");
  if (input_channels < 1) throw ConfigError("input_channels must be positive");
  if (stage_channels.empty()) throw ConfigError("backbone needs at least one conv stage");
  for (int c : stage_channels) {
    if (c <= 0) throw ConfigError("conv stage with zero channels");
  }
  if (num_classes < 2) throw ConfigError("backbone needs K >= 2 classes");
}

template <typename T>
Network<T>::Network(BackboneConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<int> shape) {
    std::size_t size = 1;
    for (int d : shape) size *= static_cast<std::size_t>(d);
    layout_.push_back({std::move(name), std::move(shape), offset, size});
    offset += size;
  };
  int in = cfg_.input_channels;
  for (std::size_t s = 0; s < cfg_.stage_channels.size(); ++s) {
    const int out = cfg_.stage_channels[s];
    add("conv" + std::to_string(s) + ".weight", {out, 9 * in});
    add("conv" + std::to_string(s) + ".bias", {out});
    in = out;
  }
  add("fc.weight", {cfg_.num_classes, in});
  add("fc.bias", {cfg_.num_classes});
  params_.assign(offset, T(0));
}

template <typename T>
typename Network<T>::MatrixMap Network<T>::conv_weight(int stage) {
  const auto& s = spec(2 * static_cast<std::size_t>(stage));
  return MatrixMap(params_.data() + s.offset, s.shape[0], s.shape[1]);
}
template <typename T>
typename Network<T>::ConstMatrixMap Network<T>::conv_weight(int stage) const {
  const auto& s = spec(2 * static_cast<std::size_t>(stage));
  return ConstMatrixMap(params_.data() + s.offset, s.shape[0], s.shape[1]);
}
template <typename T>
typename Network<T>::VectorMap Network<T>::conv_bias(int stage) {
  const auto& s = spec(2 * static_cast<std::size_t>(stage) + 1);
  return VectorMap(params_.data() + s.offset, s.shape[0]);
}
template <typename T>
typename Network<T>::ConstVectorMap Network<T>::conv_bias(int stage) const {
  const auto& s = spec(2 * static_cast<std::size_t>(stage) + 1);
  return ConstVectorMap(params_.data() + s.offset, s.shape[0]);
}
template <typename T>
typename Network<T>::MatrixMap Network<T>::fc_weight() {
  const auto& s = spec(layout_.size() - 2);
  return MatrixMap(params_.data() + s.offset, s.shape[0], s.shape[1]);
}
template <typename T>
typename Network<T>::ConstMatrixMap Network<T>::fc_weight() const {
  const auto& s = spec(layout_.size() - 2);
  return ConstMatrixMap(params_.data() + s.offset, s.shape[0], s.shape[1]);
}
template <typename T>
typename Network<T>::VectorMap Network<T>::fc_bias() {
  const auto& s = spec(layout_.size() - 1);
  return VectorMap(params_.data() + s.offset, s.shape[0]);
}
template <typename T>
typename Network<T>::ConstVectorMap Network<T>::fc_bias() const {
  const auto& s = spec(layout_.size() - 1);
  return ConstVectorMap(params_.data() + s.offset, s.shape[0]);
}

Network<float> init_backbone(const BackboneConfig& cfg) {
  Network<float> net(cfg);
  RandomStream rng = RandomStream::derive(cfg.seed, "backbone_init");
  for (int s = 0; s < net.num_stages(); ++s) {
    auto w = net.conv_weight(s);
    const double std = std::sqrt(2.0 / static_cast<double>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<float>(rng.normal(0.0, std));
    }
  }
  auto fc = net.fc_weight();
  const double std = 1.0 / std::sqrt(static_cast<double>(fc.cols()));
  for (Eigen::Index j = 0; j < fc.cols(); ++j) {
    for (Eigen::Index i = 0; i < fc.rows(); ++i) fc(i, j) = static_cast<float>(rng.normal(0.0, std));
  }
  return net;
}

template <typename T>
ForwardOutput<T> forward(const Network<T>& net, std::span<const Image> batch,
                         ForwardCache<T>* cache) {
  const BackboneConfig& cfg = net.config();
  const int n = static_cast<int>(batch.size());
  Matrix<T> x = images_to_matrix<T>(batch, cfg);
  int channels = cfg.input_channels;
  int side = cfg.input_size;
  if (cache) {
    cache->columns.clear();
    cache->activations.clear();
    cache->batch = n;
  }
  for (int s = 0; s < net.num_stages(); ++s) {
    Matrix<T> col = im2col(x, channels, n, side, side);
    Matrix<T> z = net.conv_weight(s) * col;
    z.colwise() += net.conv_bias(s);
    x = z.cwiseMax(T(0));
    channels = cfg.stage_channels[s];
    side = conv_out(side);
    if (cache) {
      cache->columns.push_back(std::move(col));
      cache->activations.push_back(x);
    }
  }

  ForwardOutput<T> out;
  out.batch = n;
  out.height = side;
  out.width = side;
  const Eigen::Index area = static_cast<Eigen::Index>(side) * side;
  Matrix<T> pooled(channels, n);
  for (int i = 0; i < n; ++i) {
    pooled.col(i) = x.middleCols(i * area, area).rowwise().sum() / static_cast<T>(area);
  }
  out.fc_weights = net.fc_weight();
  out.fc_bias = net.fc_bias();
  Matrix<T> logits_t = out.fc_weights * pooled;
  logits_t.colwise() += out.fc_bias;
  out.logits = logits_t.transpose();
  out.features = std::move(x);
  if (cache) cache->pooled = std::move(pooled);
  return out;
}

template <typename T>
AttentionMaps<T> compute_attention_maps(const ForwardOutput<T>& out) {
  AttentionMaps<T> m;
  m.maps = out.fc_weights * out.features;
  m.batch = out.batch;
  m.height = out.height;
  m.width = out.width;
  return m;
}

template <typename T>
AttentionMaps<T> flip_attention_maps(const AttentionMaps<T>& m) {
  AttentionMaps<T> out = m;
  for (int n = 0; n < m.batch; ++n) {
    for (int h = 0; h < m.height; ++h) {
      const Eigen::Index row = (static_cast<Eigen::Index>(n) * m.height + h) * m.width;
      for (int w = 0; w < m.width; ++w) {
        out.maps.col(row + w) = m.maps.col(row + m.width - 1 - w);
      }
    }
  }
  return out;
}

template <typename T>
void backward(const Network<T>& net, const ForwardCache<T>& cache,
              const ForwardOutput<T>& out, const Matrix<T>& d_logits,
              const Matrix<T>* d_maps, std::span<T> grad) {
  const BackboneConfig& cfg = net.config();
  if (grad.size() != net.num_parameters()) throw ShapeMismatch("gradient buffer size mismatch");
  if (d_logits.rows() != out.batch || d_logits.cols() != cfg.num_classes) {
    throw ShapeMismatch("d_logits must be N x K");
  }
  const auto& layout = net.layout();
  auto grad_matrix = [&](std::size_t idx) {
    const auto& s = layout[idx];
    return Eigen::Map<Matrix<T>>(grad.data() + s.offset, s.shape[0],
                                 s.shape.size() > 1 ? s.shape[1] : 1);
  };

  const int n = cache.batch;
  const Eigen::Index area = static_cast<Eigen::Index>(out.height) * out.width;
  const Matrix<T> dl = d_logits.transpose();  // K x N
  auto g_fc_w = grad_matrix(layout.size() - 2);
  auto g_fc_b = grad_matrix(layout.size() - 1);
  g_fc_w.noalias() += dl * cache.pooled.transpose();
  g_fc_b += dl.rowwise().sum();

  const Matrix<T> d_pooled = out.fc_weights.transpose() * dl;  // C x N
  Matrix<T> d_act(out.features.rows(), out.features.cols());
  for (int i = 0; i < n; ++i) {
    d_act.middleCols(i * area, area) =
        (d_pooled.col(i) / static_cast<T>(area)).replicate(1, area);
  }
  if (d_maps) {
    if (d_maps->rows() != out.fc_weights.rows() || d_maps->cols() != out.features.cols()) {
      throw ShapeMismatch("d_maps must be K x N*H'*W'");
    }
    g_fc_w.noalias() += (*d_maps) * out.features.transpose();
    d_act.noalias() += out.fc_weights.transpose() * (*d_maps);
  }

  std::vector<int> sides{cfg.input_size};
  for (int s = 0; s < net.num_stages(); ++s) sides.push_back(conv_out(sides.back()));

  for (int s = net.num_stages() - 1; s >= 0; --s) {
    const Matrix<T>& act = cache.activations[s];
    Matrix<T> dz = (act.array() > T(0)).select(d_act, T(0));
    auto g_w = grad_matrix(2 * static_cast<std::size_t>(s));
    auto g_b = grad_matrix(2 * static_cast<std::size_t>(s) + 1);
    g_w.noalias() += dz * cache.columns[s].transpose();
    g_b += dz.rowwise().sum();
    if (s > 0) {
      const Matrix<T> d_col = net.conv_weight(s).transpose() * dz;
      d_act = col2im(d_col, cfg.stage_channels[s - 1], n, sides[s], sides[s]);
    }
  }
}

std::string model_id(const Network<float>& net) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (float v : net.parameters()) {
    unsigned char bytes[sizeof(float)];
    std::memcpy(bytes, &v, sizeof(float));
    for (unsigned char b : bytes) {
      hash ^= b;
      hash *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

#define OSND_INSTANTIATE(T)                                                              \
  template class Network<T>;                                                             \
  template ForwardOutput<T> forward<T>(const Network<T>&, std::span<const Image>,        \
                                       ForwardCache<T>*);                                \
  template AttentionMaps<T> compute_attention_maps<T>(const ForwardOutput<T>&);          \
  template AttentionMaps<T> flip_attention_maps<T>(const AttentionMaps<T>&);             \
  template void backward<T>(const Network<T>&, const ForwardCache<T>&,                   \
                            const ForwardOutput<T>&, const Matrix<T>&, const Matrix<T>*, \
                            std::span<T>);

OSND_INSTANTIATE(float)
OSND_INSTANTIATE(double)

#undef OSND_INSTANTIATE

}  // namespace osnd
