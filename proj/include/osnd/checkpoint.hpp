#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "osnd/model.hpp"

namespace osnd {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary archive: magic "OSNDCKPT", version, metadata (key=value strings,
// including the embedded backbone config), then named float32 tensors in
// little-endian order.
void save_checkpoint(const std::filesystem::path& file, const Network<float>& net,
                     const std::map<std::string, std::string>& metadata = {});

struct LoadedCheckpoint {
  Network<float> net;
  std::map<std::string, std::string> metadata;
};

// Throws FormatError on a bad magic/version or a tensor that does not match
// the embedded config.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& file);

std::map<std::string, std::string> backbone_to_metadata(const BackboneConfig& cfg);
BackboneConfig backbone_from_metadata(const std::map<std::string, std::string>& meta);

}  // namespace osnd
