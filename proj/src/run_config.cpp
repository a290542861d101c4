#include "osnd/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

#include "osnd/csv.hpp"
#include "osnd/errors.hpp"

namespace osnd {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, value);
  if (text.empty() || res.ec != std::errc() || res.ptr != last) {
    throw ConfigError("bad value for " + key + ": '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("bad boolean for " + key + ": '" + text + "'");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

struct Key {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

// `field` is a generic lambda returning a reference to the described member.
template <typename T, typename F>
Key num(F field) {
  return {[field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(field(c));
            } else {
              return std::to_string(field(c));
            }
          },
          [field](RunConfig& c, const std::string& k, const std::string& v) {
            field(c) = parse_number<T>(k, v);
          }};
}

template <typename F>
Key flag(F field) {
  return {[field](const RunConfig& c) { return bool_text(field(c)); },
          [field](RunConfig& c, const std::string& k, const std::string& v) {
            field(c) = parse_bool(k, v);
          }};
}

template <typename F>
Key path(F field) {
  return {[field](const RunConfig& c) { return field(c).string(); },
          [field](RunConfig& c, const std::string&, const std::string& v) { field(c) = v; }};
}

template <typename F>
Key int_list(F field) {
  return {[field](const RunConfig& c) { return format_int_list(field(c)); },
          [field](RunConfig& c, const std::string&, const std::string& v) {
            field(c) = parse_int_list(v);
          }};
}

#define OSND_FIELD(expr) [](auto& c) -> auto& { return c.expr; }

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> table = {
      {"dataset", path(OSND_FIELD(dataset))},
      {"index_csv", path(OSND_FIELD(index_csv))},
      {"resize", num<int>(OSND_FIELD(resize))},
      {"online_dataset", path(OSND_FIELD(online_dataset))},
      {"seed", num<std::uint64_t>(OSND_FIELD(seed))},
      {"close_classes", int_list(OSND_FIELD(split.close_classes))},
      {"open_classes", int_list(OSND_FIELD(split.open_classes))},
      {"stage_channels", int_list(OSND_FIELD(stage_channels))},
      {"lr", num<double>(OSND_FIELD(train.lr_init))},
      {"weight_decay", num<double>(OSND_FIELD(train.weight_decay))},
      {"epochs", num<int>(OSND_FIELD(train.max_epochs))},
      {"cycle_len", num<int>(OSND_FIELD(train.cycle_len))},
      {"lambda", num<double>(OSND_FIELD(train.lambda))},
      {"gmm_threshold", num<double>(OSND_FIELD(train.gmm_threshold))},
      {"batch_size", num<int>(OSND_FIELD(train.batch_size))},
      {"use_consistency", flag(OSND_FIELD(train.use_consistency))},
      {"use_cyclic_lr", flag(OSND_FIELD(train.use_cyclic_lr))},
      {"use_cycle_training", flag(OSND_FIELD(train.use_cycle_training))},
      {"cons_on_all", flag(OSND_FIELD(train.cons_on_all))},
      {"erase_probability", num<double>(OSND_FIELD(train.erase.probability))},
      {"erase_area_lo", num<double>(OSND_FIELD(train.erase.area_lo))},
      {"erase_area_hi", num<double>(OSND_FIELD(train.erase.area_hi))},
      {"erase_aspect_lo", num<double>(OSND_FIELD(train.erase.aspect_lo))},
      {"erase_aspect_hi", num<double>(OSND_FIELD(train.erase.aspect_hi))},
      {"close_epochs", num<int>(OSND_FIELD(train.close_epochs))},
      {"close_augment", flag(OSND_FIELD(train.close_augment))},
      {"fixed_class", num<int>(OSND_FIELD(fixed_class))},
      {"bins", num<int>(OSND_FIELD(bins))},
      {"synthetic_close_classes", num<int>(OSND_FIELD(synthetic.close_classes))},
      {"synthetic_open_classes", num<int>(OSND_FIELD(synthetic.open_classes))},
      {"synthetic_train_per_class", num<int>(OSND_FIELD(synthetic.train_per_class))},
      {"synthetic_test_per_class", num<int>(OSND_FIELD(synthetic.test_per_class))},
      {"synthetic_holdout_per_class", num<int>(OSND_FIELD(synthetic.holdout_per_class))},
      {"synthetic_image_size", num<int>(OSND_FIELD(synthetic.image_size))},
      {"synthetic_spacing", num<double>(OSND_FIELD(synthetic.spacing))},
      {"synthetic_open_affinity", num<double>(OSND_FIELD(synthetic.open_affinity))},
      {"synthetic_contrast", num<double>(OSND_FIELD(synthetic.contrast))},
      {"synthetic_pixel_noise", num<double>(OSND_FIELD(synthetic.pixel_noise))},
      {"synthetic_blobs_per_pattern", num<int>(OSND_FIELD(synthetic.blobs_per_pattern))},
      {"synthetic_style_dims", num<int>(OSND_FIELD(synthetic.style_dims))},
      {"synthetic_style_scale", num<double>(OSND_FIELD(synthetic.style_scale))},
      {"cons_norm",
       {[](const RunConfig& c) {
          return std::string(c.train.cons_norm == ConsistencyNorm::kFrobenius ? "frobenius"
                                                                              : "squared");
        },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "frobenius") {
            c.train.cons_norm = ConsistencyNorm::kFrobenius;
          } else if (v == "squared") {
            c.train.cons_norm = ConsistencyNorm::kSquaredError;
          } else {
            throw ConfigError("bad value for " + k + ": '" + v + "'");
          }
        }}},
      {"pseudo_mode",
       {[](const RunConfig& c) {
          return std::string(c.pseudo_source == PseudoSource::kModel ? "model" : "fixed");
        },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "model") {
            c.pseudo_source = PseudoSource::kModel;
          } else if (v == "fixed") {
            c.pseudo_source = PseudoSource::kFixedClass;
          } else {
            throw ConfigError("bad value for " + k + ": '" + v + "'");
          }
        }}},
  };
  return table;
}

#undef OSND_FIELD

}  // namespace

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  const std::string t = trim(text);
  if (t.empty()) return out;
  for (const std::string& field : split_fields(t)) {
    out.push_back(parse_number<int>("integer list", trim(field)));
  }
  return out;
}

std::string format_int_list(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [name, key] : keys()) out[name] = key.get(*this);
  return out;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& [name, value] : to_map()) {
    for (char ch : name + "=" + value + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::to_ini() const {
  std::string out;
  for (const auto& [name, value] : to_map()) out += name + " = " + value + "\n";
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = keys().find(key);
  if (it == keys().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(*this, key, value);
}

void RunConfig::validate() const {
  train.validate();
  synthetic.validate();
  if (resize < 0) throw ConfigError("resize must be non-negative");
  if (bins < 1) throw ConfigError("bins must be positive");
  if (stage_channels.empty()) throw ConfigError("stage_channels must not be empty");
  for (int c : stage_channels) {
    if (c < 1) throw ConfigError("stage_channels entries must be positive");
  }
  if (split.open_classes.empty()) throw ConfigError("open_classes must not be empty");
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

BackboneConfig RunConfig::backbone(int input_size, int num_classes) const {
  BackboneConfig b;
  b.input_size = input_size;
  b.stage_channels = stage_channels;
  b.num_classes = num_classes;
  b.seed = seed;
  return b;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + " is not key = value");
    }
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace osnd
