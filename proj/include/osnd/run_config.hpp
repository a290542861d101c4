#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "osnd/dataset.hpp"
#include "osnd/model.hpp"
#include "osnd/pseudo.hpp"
#include "osnd/synthetic.hpp"
#include "osnd/training.hpp"

namespace osnd {

// Everything one pipeline run needs. Read from a flat `key = value` file;
// '#' and ';' start comments, blank lines are ignored and [section] headers
// are not allowed. Every key except `dataset` has a default.
struct RunConfig {
  std::filesystem::path dataset;  // required by every stage after gen-synthetic
  std::filesystem::path index_csv;
  int resize = 0;  // 0 keeps the native size
  // Dataset scored by score-online; empty means the evaluation pool itself.
  std::filesystem::path online_dataset;
  std::uint64_t seed = 0;

  OpenSplitConfig split{{}, {6}};
  std::vector<int> stage_channels{16, 32, 64};
  TrainConfig train;
  // "model" or "fixed"; fixed_class < 0 picks the most populated class.
  PseudoSource pseudo_source = PseudoSource::kModel;
  int fixed_class = -1;
  SyntheticConfig synthetic;
  int bins = 50;

  // Keys and canonical values in sorted order.
  std::map<std::string, std::string> to_map() const;
  // FNV-1a 64 of the canonical "key=value\n" lines, 16 hex digits.
  std::string hash() const;
  std::string to_ini() const;

  // Applies one key; throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  // Cross-field checks (train.validate(), synthetic.validate(), ...).
  void validate() const;
  // Trained models inherit the root seed through named substreams.
  TrainConfig train_config() const;
  BackboneConfig backbone(int input_size, int num_classes) const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& file);

// "5,6" -> {5, 6}; empty string -> {}.
std::vector<int> parse_int_list(const std::string& text);
std::string format_int_list(const std::vector<int>& values);

}  // namespace osnd
