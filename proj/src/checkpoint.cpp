#include "osnd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "osnd/csv.hpp"
#include "osnd/errors.hpp"

namespace osnd {

namespace {

constexpr char kMagic[8] = {'O', 'S', 'N', 'D', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) throw FormatError("truncated checkpoint");
  return v;
}
std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  if (n > (1u << 24)) throw FormatError("checkpoint string too long");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw FormatError("truncated checkpoint");
  return s;
}

}  // namespace

std::map<std::string, std::string> backbone_to_metadata(const BackboneConfig& cfg) {
  std::string stages;
  for (std::size_t i = 0; i < cfg.stage_channels.size(); ++i) {
    if (i) stages += ',';
    stages += std::to_string(cfg.stage_channels[i]);
  }
  return {{"backbone.input_size", std::to_string(cfg.input_size)},
          {"backbone.input_channels", std::to_string(cfg.input_channels)},
          {"backbone.stage_channels", stages},
          {"backbone.num_classes", std::to_string(cfg.num_classes)},
          {"backbone.seed", std::to_string(cfg.seed)}};
}

BackboneConfig backbone_from_metadata(const std::map<std::string, std::string>& meta) {
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end()) throw FormatError("checkpoint metadata lacks " + key);
    return it->second;
  };
  BackboneConfig cfg;
  try {
    cfg.input_size = std::stoi(get("backbone.input_size"));
    cfg.input_channels = std::stoi(get("backbone.input_channels"));
    cfg.num_classes = std::stoi(get("backbone.num_classes"));
    cfg.seed = std::stoull(get("backbone.seed"));
    cfg.stage_channels.clear();
    for (const auto& f : split_fields(get("backbone.stage_channels"))) {
      cfg.stage_channels.push_back(std::stoi(f));
    }
  } catch (const std::logic_error&) {
    throw FormatError("malformed backbone metadata in checkpoint");
  }
  return cfg;
}

void save_checkpoint(const std::filesystem::path& file, const Network<float>& net,
                     const std::map<std::string, std::string>& metadata) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw FormatError("cannot write " + file.string());
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);

  std::map<std::string, std::string> meta = metadata;
  for (auto& [k, v] : backbone_to_metadata(net.config())) meta[k] = v;
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    put_string(out, k);
    put_string(out, v);
  }

  const auto params = net.parameters();
  put_u32(out, static_cast<std::uint32_t>(net.layout().size()));
  for (const TensorSpec& spec : net.layout()) {
    put_string(out, spec.name);
    put_u32(out, static_cast<std::uint32_t>(spec.shape.size()));
    for (int d : spec.shape) put_u32(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(params.data() + spec.offset),
              static_cast<std::streamsize>(spec.size * sizeof(float)));
  }
  if (!out) throw FormatError("failed writing " + file.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + file.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(file.string() + " is not a checkpoint");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  std::map<std::string, std::string> meta;
  const std::uint32_t entries = get_u32(in);
  for (std::uint32_t i = 0; i < entries; ++i) {
    std::string k = get_string(in);
    meta[k] = get_string(in);
  }
  LoadedCheckpoint ckpt{Network<float>(backbone_from_metadata(meta)), meta};
  auto params = ckpt.net.parameters();
  const std::uint32_t tensors = get_u32(in);
  if (tensors != ckpt.net.layout().size()) throw FormatError("checkpoint tensor count mismatch");
  for (const TensorSpec& spec : ckpt.net.layout()) {
    if (get_string(in) != spec.name) throw FormatError("unexpected tensor name in checkpoint");
    const std::uint32_t rank = get_u32(in);
    if (rank != spec.shape.size()) throw FormatError("tensor rank mismatch for " + spec.name);
    for (int d : spec.shape) {
      if (get_u32(in) != static_cast<std::uint32_t>(d)) {
        throw FormatError("tensor shape mismatch for " + spec.name);
      }
    }
    if (!in.read(reinterpret_cast<char*>(params.data() + spec.offset),
                 static_cast<std::streamsize>(spec.size * sizeof(float)))) {
      throw FormatError("truncated checkpoint");
    }
  }
  return ckpt;
}

}  // namespace osnd
