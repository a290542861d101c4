#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "osnd/image.hpp"

namespace osnd {

enum class Origin { kTrain, kTest };

const char* to_string(Origin origin);

struct Sample {
  std::string id;    // "<split>/<class>/<file>" for directory datasets
  std::string path;  // source file, empty for in-memory samples
  Image image;
  int label = 0;     // index into Dataset::class_names
  Origin origin = Origin::kTrain;
};

struct Dataset {
  std::vector<std::string> class_names;  // sorted lexicographically
  std::vector<Sample> samples;
  int height = 0;
  int width = 0;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::size_t count(Origin origin) const;
};

struct LoadOptions {
  // Square side length every image is resized to. Without it all images
  // must already share one size.
  std::optional<int> resize;
  // Optional CSV index with header "path,label,split"; paths are relative
  // to the dataset root and labels are class names.
  std::optional<std::filesystem::path> index_csv;
};

// Reads root/<train|test>/<class_name>/<image> (or the CSV index). Class
// indices follow the lexicographic order of class names; samples are
// ordered by split, class, then file name.
Dataset load_dataset(const std::filesystem::path& root, const LoadOptions& options = {});

// Validates sample invariants and fills height/width. Used by loaders and
// the synthetic generator.
void finalize_dataset(Dataset& ds);

struct OpenSplitConfig {
  // Empty means "every class not listed in open_classes".
  std::vector<int> close_classes;
  std::vector<int> open_classes;
};

struct OpenSplit {
  // Labels re-indexed to 0..K-1.
  std::vector<Sample> close_train;
  // All original test samples followed by all open-class train samples.
  // Labels keep the original class index and are never read by training.
  std::vector<Sample> eval_pool;
  // Ground truth for metrics only, parallel to eval_pool.
  std::vector<bool> eval_is_open;
  std::map<int, int> label_remap;  // original -> compact close index
  std::vector<int> open_classes;

  int num_close_classes() const { return static_cast<int>(label_remap.size()); }
  std::size_t num_open() const;
};

OpenSplit build_open_split(const Dataset& ds, const OpenSplitConfig& cfg);

// Manifest rows: id,path,role,pseudo_slot. pseudo_slot is the eval-pool
// position (the row a pseudo label will occupy) or -1 for close_train.
void write_split_manifest(const std::filesystem::path& file, const OpenSplit& split,
                          const std::vector<std::string>& header_comments = {});

}  // namespace osnd
