#include "osnd/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "osnd/csv.hpp"
#include "osnd/errors.hpp"

namespace fs = std::filesystem;

namespace osnd {

namespace {

Origin parse_split(const std::string& name) {
  if (name == "train") return Origin::kTrain;
  if (name == "test") return Origin::kTest;
  throw FormatError("unknown split '" + name + "' (expected train or test)");
}

Image decode_image(const fs::path& file, const std::optional<int>& resize) {
  cv::Mat bgr = cv::imread(file.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw FormatError("cannot decode image " + file.string());
  if (resize) {
    if (*resize <= 0) throw ConfigError("resize must be positive");
    if (bgr.rows != *resize || bgr.cols != *resize) {
      cv::Mat scaled;
      cv::resize(bgr, scaled, cv::Size(*resize, *resize), 0, 0, cv::INTER_AREA);
      bgr = scaled;
    }
  }
  Image img(3, bgr.rows, bgr.cols);
  for (int r = 0; r < bgr.rows; ++r) {
    const auto* row = bgr.ptr<cv::Vec3b>(r);
    for (int c = 0; c < bgr.cols; ++c) {
      // OpenCV stores BGR; samples are RGB.
      img.at(0, r, c) = row[c][2] / 255.0f;
      img.at(1, r, c) = row[c][1] / 255.0f;
      img.at(2, r, c) = row[c][0] / 255.0f;
    }
  }
  return img;
}

struct PendingSample {
  std::string id;
  fs::path file;
  std::string class_name;
  Origin origin;
};

Dataset decode_all(std::vector<PendingSample> pending, const LoadOptions& options) {
  if (pending.empty()) throw NoData("dataset contains no images");
  std::set<std::string> names;
  for (const auto& p : pending) names.insert(p.class_name);
  if (names.size() < 2) throw NoData("dataset needs at least 2 classes");

  Dataset ds;
  ds.class_names.assign(names.begin(), names.end());
  std::map<std::string, int> index;
  for (int i = 0; i < ds.num_classes(); ++i) index[ds.class_names[i]] = i;

  std::sort(pending.begin(), pending.end(), [&](const auto& a, const auto& b) {
    if (a.origin != b.origin) return a.origin < b.origin;
    if (a.class_name != b.class_name) return index[a.class_name] < index[b.class_name];
    return a.id < b.id;
  });

  ds.samples.reserve(pending.size());
  for (auto& p : pending) {
    Sample s;
    s.id = std::move(p.id);
    s.path = p.file.string();
    s.image = decode_image(p.file, options.resize);
    s.label = index[p.class_name];
    s.origin = p.origin;
    ds.samples.push_back(std::move(s));
  }
  finalize_dataset(ds);
  return ds;
}

std::vector<PendingSample> scan_directory(const fs::path& root) {
  std::vector<PendingSample> pending;
  for (const auto& split_entry : fs::directory_iterator(root)) {
    if (!split_entry.is_directory()) continue;
    const std::string split = split_entry.path().filename().string();
    if (split.starts_with(".")) continue;
    const Origin origin = parse_split(split);
    for (const auto& class_entry : fs::directory_iterator(split_entry.path())) {
      if (!class_entry.is_directory()) continue;
      const std::string cls = class_entry.path().filename().string();
      for (const auto& file : fs::directory_iterator(class_entry.path())) {
        if (!file.is_regular_file()) continue;
        const std::string fname = file.path().filename().string();
        if (fname.starts_with(".")) continue;
        pending.push_back({split + "/" + cls + "/" + fname, file.path(), cls, origin});
      }
    }
  }
  return pending;
}

std::vector<PendingSample> scan_index(const fs::path& root, const fs::path& index_csv) {
  const CsvTable table = read_csv(index_csv);
  const std::size_t path_col = table.column("path");
  const std::size_t label_col = table.column("label");
  const std::size_t split_col = table.column("split");
  std::vector<PendingSample> pending;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    const std::string& rel = row[path_col];
    if (!seen.insert(rel).second) throw FormatError("duplicate index path " + rel);
    pending.push_back({rel, root / rel, row[label_col], parse_split(row[split_col])});
  }
  return pending;
}

}  // namespace

const char* to_string(Origin origin) {
  return origin == Origin::kTrain ? "train" : "test";
}

std::size_t Dataset::count(Origin origin) const {
  return static_cast<std::size_t>(std::count_if(
      samples.begin(), samples.end(), [&](const Sample& s) { return s.origin == origin; }));
}

void finalize_dataset(Dataset& ds) {
  if (ds.samples.empty()) throw NoData("dataset contains no samples");
  const Image& first = ds.samples.front().image;
  for (const Sample& s : ds.samples) {
    if (!s.image.same_shape(first)) {
      throw ShapeMismatch("image " + s.id + " is " + std::to_string(s.image.height) + "x" +
                          std::to_string(s.image.width) + ", expected " +
                          std::to_string(first.height) + "x" + std::to_string(first.width) +
                          " (set a resize size to mix image sizes)");
    }
    if (s.label < 0 || s.label >= ds.num_classes()) {
      throw FormatError("sample " + s.id + " has label out of range");
    }
  }
  ds.height = first.height;
  ds.width = first.width;
}

Dataset load_dataset(const fs::path& root, const LoadOptions& options) {
  if (options.index_csv) return decode_all(scan_index(root, *options.index_csv), options);
  if (!fs::is_directory(root)) throw NoData("dataset root " + root.string() + " does not exist");
  return decode_all(scan_directory(root), options);
}

std::size_t OpenSplit::num_open() const {
  return static_cast<std::size_t>(std::count(eval_is_open.begin(), eval_is_open.end(), true));
}

OpenSplit build_open_split(const Dataset& ds, const OpenSplitConfig& cfg) {
  const int total = ds.num_classes();
  if (cfg.open_classes.empty()) throw ConfigError("at least one open class is required");

  std::set<int> open;
  for (int c : cfg.open_classes) {
    if (c < 0 || c >= total) {
      throw ConfigError("open class " + std::to_string(c) + " is not in the dataset");
    }
    open.insert(c);
  }
  std::vector<int> close = cfg.close_classes;
  if (close.empty()) {
    for (int c = 0; c < total; ++c) {
      if (!open.contains(c)) close.push_back(c);
    }
  }
  std::set<int> close_set;
  for (int c : close) {
    if (c < 0 || c >= total) {
      throw ConfigError("close class " + std::to_string(c) + " is not in the dataset");
    }
    if (open.contains(c)) {
      throw ConfigError("class " + std::to_string(c) + " is both open and close");
    }
    if (!close_set.insert(c).second) {
      throw ConfigError("close class " + std::to_string(c) + " listed twice");
    }
  }
  if (close.size() < 2) throw ConfigError("at least 2 close classes are required");
  if (close.size() + open.size() != static_cast<std::size_t>(total)) {
    throw ConfigError("every dataset class must be either open or close");
  }

  OpenSplit split;
  split.open_classes.assign(open.begin(), open.end());
  for (std::size_t i = 0; i < close.size(); ++i) split.label_remap[close[i]] = static_cast<int>(i);

  for (const Sample& s : ds.samples) {
    if (s.origin == Origin::kTest) {
      split.eval_pool.push_back(s);
      split.eval_is_open.push_back(open.contains(s.label));
    }
  }
  for (const Sample& s : ds.samples) {
    if (s.origin != Origin::kTrain) continue;
    if (open.contains(s.label)) {
      split.eval_pool.push_back(s);
      split.eval_is_open.push_back(true);
    } else {
      Sample remapped = s;
      remapped.label = split.label_remap.at(s.label);
      split.close_train.push_back(std::move(remapped));
    }
  }
  std::set<std::string> ids;
  for (const Sample& s : split.eval_pool) {
    if (!ids.insert(s.id).second) throw FormatError("duplicate eval sample id " + s.id);
  }
  return split;
}

void write_split_manifest(const fs::path& file, const OpenSplit& split,
                          const std::vector<std::string>& header_comments) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw FormatError("cannot write " + file.string());
  for (const auto& c : header_comments) out << "# " << c << '\n';
  out << "id,path,role,pseudo_slot\n";
  for (const Sample& s : split.close_train) {
    out << s.id << ',' << s.path << ",close_train,-1\n";
  }
  for (std::size_t i = 0; i < split.eval_pool.size(); ++i) {
    out << split.eval_pool[i].id << ',' << split.eval_pool[i].path << ",eval," << i << '\n';
  }
}

}  // namespace osnd
