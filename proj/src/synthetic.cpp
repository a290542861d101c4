#include "osnd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <opencv2/imgcodecs.hpp>

#include "osnd/errors.hpp"
#include "osnd/random.hpp"

namespace fs = std::filesystem;

namespace osnd {

namespace {

using Pattern = std::vector<double>;  // CHW, 3 * S * S

void add_blob(Pattern& p, int side, double cy, double cx, double sy, double sx,
              const double (&color)[3]) {
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < side; ++r) {
      for (int col = 0; col < side; ++col) {
        const double dy = (r - cy) / sy;
        const double dx = (col - cx) / sx;
        p[(static_cast<std::size_t>(c) * side + r) * side + col] +=
            color[c] * std::exp(-0.5 * (dy * dy + dx * dx));
      }
    }
  }
}

std::vector<Pattern> make_patterns(const SyntheticConfig& cfg) {
  const int side = cfg.image_size;
  const std::size_t dim = 3 * static_cast<std::size_t>(side) * side;
  RandomStream rng = RandomStream::derive(cfg.seed, "synthetic/patterns");
  std::vector<Pattern> patterns;
  const int count = cfg.total_classes() * (1 + cfg.style_dims);
  for (int k = 0; k < count; ++k) {
    Pattern p(dim, 0.0);
    for (int b = 0; b < cfg.blobs_per_pattern; ++b) {
      const double cy = rng.uniform(0.15, 0.85) * side;
      const double cx = rng.uniform(0.15, 0.85) * side;
      const double sy = rng.uniform(0.06, 0.16) * side;
      const double sx = rng.uniform(0.06, 0.16) * side;
      const double color[3] = {rng.normal(), rng.normal(), rng.normal()};
      add_blob(p, side, cy, cx, sy, sx, color);
    }
    // Gram-Schmidt against earlier patterns keeps the classes equidistant.
    for (const Pattern& q : patterns) {
      double dot = 0.0;
      double qq = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        dot += p[i] * q[i];
        qq += q[i] * q[i];
      }
      for (std::size_t i = 0; i < dim; ++i) p[i] -= dot / qq * q[i];
    }
    double norm = 0.0;
    for (double v : p) norm += v * v;
    norm = std::sqrt(norm / static_cast<double>(dim));  // unit RMS
    if (norm <= 0.0) throw ConfigError("degenerate synthetic pattern; change the seed");
    for (double& v : p) v /= norm;
    patterns.push_back(std::move(p));
  }
  return patterns;
}

Pattern make_face(int side) {
  Pattern face(3 * static_cast<std::size_t>(side) * side, 0.5);
  const double s = side;
  const double skin[3] = {0.15, 0.08, 0.02};
  const double dark[3] = {-0.25, -0.25, -0.25};
  add_blob(face, side, 0.5 * s, 0.5 * s, 0.38 * s, 0.30 * s, skin);
  add_blob(face, side, 0.38 * s, 0.33 * s, 0.05 * s, 0.07 * s, dark);
  add_blob(face, side, 0.38 * s, 0.67 * s, 0.05 * s, 0.07 * s, dark);
  add_blob(face, side, 0.72 * s, 0.5 * s, 0.04 * s, 0.14 * s, dark);
  return face;
}

std::string class_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "class_%02d", k);
  return buf;
}

std::string file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05d.png", index);
  return buf;
}

// The open class leans towards close class 0 by `open_affinity`.
std::vector<double> class_center(const SyntheticConfig& cfg, int k) {
  std::vector<double> center(static_cast<std::size_t>(cfg.total_classes()), 0.0);
  if (k < cfg.close_classes) {
    center[static_cast<std::size_t>(k)] = cfg.spacing;
  } else {
    const double a = cfg.open_affinity;
    center[0] = a * cfg.spacing;
    center[static_cast<std::size_t>(k)] = std::sqrt(1.0 - a * a) * cfg.spacing;
  }
  return center;
}

Image render(const SyntheticConfig& cfg, const std::vector<Pattern>& patterns,
             const Pattern& face, int k, RandomStream& rng) {
  const int side = cfg.image_size;
  const double unit = cfg.contrast / std::max(1.0, cfg.spacing / 2.0);
  std::vector<double> coeff = class_center(cfg, k);
  for (double& c : coeff) c += rng.normal();
  // Private style patterns of class k follow the class-mean patterns.
  const std::size_t style_begin =
      static_cast<std::size_t>(cfg.total_classes() + k * cfg.style_dims);
  std::vector<double> style(static_cast<std::size_t>(cfg.style_dims));
  for (double& u : style) u = rng.normal(0.0, cfg.style_scale);
  Image img(3, side, side);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    double v = face[i] + rng.normal(0.0, cfg.pixel_noise);
    for (std::size_t j = 0; j < coeff.size(); ++j) v += unit * coeff[j] * patterns[j][i];
    for (std::size_t j = 0; j < style.size(); ++j) {
      v += unit * style[j] * patterns[style_begin + j][i];
    }
    v = std::clamp(v, 0.0, 1.0);
    // Quantize like an 8-bit PNG so in-memory and on-disk datasets agree.
    img.pixels[i] = static_cast<float>(std::lround(v * 255.0)) / 255.0f;
  }
  return img;
}

void fill_split(const SyntheticConfig& cfg, const std::vector<Pattern>& patterns,
                const Pattern& face, Dataset& ds, const std::string& split, Origin origin,
                int per_class) {
  for (int k = 0; k < cfg.total_classes(); ++k) {
    for (int i = 0; i < per_class; ++i) {
      RandomStream rng = RandomStream::derive(
          cfg.seed, "synthetic/" + split + "/" + std::to_string(k) + "/" + std::to_string(i));
      Sample s;
      s.id = std::string(to_string(origin)) + "/" + class_name(k) + "/" + file_name(i);
      s.image = render(cfg, patterns, face, k, rng);
      s.label = k;
      s.origin = origin;
      ds.samples.push_back(std::move(s));
    }
  }
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
  for (const Sample& s : ds.samples) {
    const fs::path file = dir / s.id;
    fs::create_directories(file.parent_path());
    const Image& img = s.image;
    cv::Mat bgr(img.height, img.width, CV_8UC3);
    for (int r = 0; r < img.height; ++r) {
      auto* row = bgr.ptr<cv::Vec3b>(r);
      for (int c = 0; c < img.width; ++c) {
        for (int ch = 0; ch < 3; ++ch) {
          row[c][2 - ch] = static_cast<unsigned char>(std::lround(img.at(ch, r, c) * 255.0f));
        }
      }
    }
    if (!cv::imwrite(file.string(), bgr)) throw FormatError("cannot write " + file.string());
  }
}

}  // namespace

void SyntheticConfig::validate() const {
  if (close_classes < 2) throw ConfigError("synthetic data needs at least 2 close classes");
  if (open_classes < 1) throw ConfigError("synthetic data needs at least 1 open class");
  if (train_per_class < 1 || test_per_class < 1) {
    throw ConfigError("synthetic per-class counts must be positive");
  }
  if (holdout_per_class < 0) throw ConfigError("holdout_per_class must be non-negative");
  if (image_size < 4) throw ConfigError("synthetic image_size must be at least 4");
  if (!(spacing > 0.0)) throw ConfigError("synthetic spacing must be positive");
  if (open_affinity < 0.0 || open_affinity > 1.0) {
    throw ConfigError("open_affinity must lie in [0, 1]");
  }
  if (!(contrast > 0.0)) throw ConfigError("contrast must be positive");
  if (pixel_noise < 0.0) throw ConfigError("pixel_noise must be non-negative");
  if (blobs_per_pattern < 1) throw ConfigError("blobs_per_pattern must be positive");
  if (style_dims < 0) throw ConfigError("style_dims must be non-negative");
  if (style_scale < 0.0) throw ConfigError("style_scale must be non-negative");
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const std::vector<Pattern> patterns = make_patterns(cfg);
  const Pattern face = make_face(cfg.image_size);

  SyntheticData data;
  for (int k = 0; k < cfg.total_classes(); ++k) data.dataset.class_names.push_back(class_name(k));
  fill_split(cfg, patterns, face, data.dataset, "train", Origin::kTrain, cfg.train_per_class);
  fill_split(cfg, patterns, face, data.dataset, "test", Origin::kTest, cfg.test_per_class);
  finalize_dataset(data.dataset);

  if (cfg.holdout_per_class > 0) {
    data.holdout.class_names = data.dataset.class_names;
    fill_split(cfg, patterns, face, data.holdout, "holdout", Origin::kTest, cfg.holdout_per_class);
    finalize_dataset(data.holdout);
  }
  return data;
}

void write_synthetic(const SyntheticConfig& cfg, const fs::path& dir) {
  const SyntheticData data = generate_synthetic(cfg);
  write_dataset(data.dataset, dir);
  if (!data.holdout.samples.empty()) {
    write_dataset(data.holdout, fs::path(dir.string() + "_holdout"));
  }
}

}  // namespace osnd
