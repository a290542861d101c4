#pragma once

#include "osnd/image.hpp"
#include "osnd/random.hpp"

namespace osnd {

struct EraseConfig {
  double probability = 0.5;
  double area_lo = 0.02;  // erased area / image area
  double area_hi = 0.4;
  double aspect_lo = 0.3;
  double aspect_hi = 3.3;

  void validate() const;
};

// With probability `probability` overwrites one axis-aligned rectangle whose
// area ratio lies in [area_lo, area_hi] with uniform noise; otherwise
// returns the input unchanged. Exactly one draw decides whether to erase.
Image random_erase(const Image& img, RandomStream& rng, const EraseConfig& cfg);

// Pixel (r, c) -> (r, W-1-c) in every channel.
Image horizontal_flip(const Image& img);

// The (erased, flipped) pair fed to one training step.
struct AugmentedPair {
  Image erased;
  Image flipped;
};

AugmentedPair make_augmented_pair(const Image& img, RandomStream& rng, const EraseConfig& cfg);

}  // namespace osnd
