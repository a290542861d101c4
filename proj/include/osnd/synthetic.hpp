#pragma once

#include <cstdint>
#include <filesystem>

#include "osnd/dataset.hpp"

namespace osnd {

// Generator for "blob-face" datasets. Every image is a shared face template
// plus a mix of class patterns (smooth colored Gaussian blobs) whose
// coefficients are drawn from a per-class Gaussian in pattern space:
//   coefficient = spacing * e_class + N(0, I)
// so `spacing` is the ratio between inter-class distance and within-class
// spread. Each class also varies along `style_dims` private patterns with
// standard deviation `style_scale`; a close-set model never sees the open
// classes' private patterns. Open classes sit partly towards close class 0
// (open_affinity), so a large spacing concentrates their predictions on that
// class while a small spacing scatters them over all close classes.
struct SyntheticConfig {
  int close_classes = 6;
  int open_classes = 1;
  int train_per_class = 60;
  int test_per_class = 30;
  int holdout_per_class = 0;  // extra test-only samples for online scoring
  int image_size = 32;
  double spacing = 1.0;
  double open_affinity = 0.7;
  double contrast = 0.12;     // pixel amplitude of one unit of pattern coefficient
  double pixel_noise = 0.02;  // i.i.d. per-pixel Gaussian noise
  int blobs_per_pattern = 4;
  int style_dims = 4;
  double style_scale = 2.0;
  std::uint64_t seed = 0;

  int total_classes() const { return close_classes + open_classes; }
  void validate() const;
};

struct SyntheticData {
  Dataset dataset;
  Dataset holdout;  // empty unless holdout_per_class > 0; all samples are test
};

SyntheticData generate_synthetic(const SyntheticConfig& cfg);

// Writes <dir>/<train|test>/<class>/<n>.png, plus <dir>_holdout/test/...
// when a holdout set is configured.
void write_synthetic(const SyntheticConfig& cfg, const std::filesystem::path& dir);

}  // namespace osnd
