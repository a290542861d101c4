#include "osnd/augment.hpp"

#include <cmath>

#include "osnd/errors.hpp"

namespace osnd {

void EraseConfig::validate() const {
  if (probability < 0.0 || probability > 1.0) {
    throw ConfigError("erase probability must lie in [0, 1]");
  }
  if (area_lo <= 0.0 || area_hi >= 1.0 || area_lo > area_hi) {
    throw ConfigError("erase area range must satisfy 0 < lo <= hi < 1");
  }
  if (aspect_lo <= 0.0 || aspect_lo > aspect_hi) {
    throw ConfigError("erase aspect range must satisfy 0 < lo <= hi");
  }
}

Image random_erase(const Image& img, RandomStream& rng, const EraseConfig& cfg) {
  cfg.validate();
  if (rng.uniform() >= cfg.probability) return img;

  const double total = static_cast<double>(img.height) * img.width;
  const double log_lo = std::log(cfg.aspect_lo);
  const double log_hi = std::log(cfg.aspect_hi);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double target = rng.uniform(cfg.area_lo, cfg.area_hi) * total;
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));
    const int h = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int w = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (h < 1 || w < 1 || h >= img.height || w >= img.width) continue;
    // Rounding can push the rectangle outside the requested range.
    const double ratio = h * static_cast<double>(w) / total;
    if (ratio < cfg.area_lo || ratio > cfg.area_hi) continue;

    const int top = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.height - h + 1)));
    const int left = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.width - w + 1)));
    Image out = img;
    for (int c = 0; c < img.channels; ++c) {
      for (int r = top; r < top + h; ++r) {
        for (int col = left; col < left + w; ++col) {
          out.at(c, r, col) = static_cast<float>(rng.uniform());
        }
      }
    }
    return out;
  }
  return img;
}

Image horizontal_flip(const Image& img) {
  Image out(img.channels, img.height, img.width);
  for (int c = 0; c < img.channels; ++c) {
    for (int r = 0; r < img.height; ++r) {
      for (int col = 0; col < img.width; ++col) {
        out.at(c, r, img.width - 1 - col) = img.at(c, r, col);
      }
    }
  }
  return out;
}

AugmentedPair make_augmented_pair(const Image& img, RandomStream& rng, const EraseConfig& cfg) {
  AugmentedPair pair;
  pair.erased = random_erase(img, rng, cfg);
  pair.flipped = horizontal_flip(pair.erased);
  return pair;
}

}  // namespace osnd
