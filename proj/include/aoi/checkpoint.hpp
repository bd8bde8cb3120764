#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "aoi/nn.hpp"

namespace aoi {

struct CheckpointMeta {
  int num_sensors = 0;
  int history_len = 0;
  int filters = 0;
  int kernel = 0;
  int hidden = 0;
  std::uint64_t seed = 0;
  int entropy_stage = 0;
  double entropy_weight = 0.0;
  std::string config_hash;
  FeatureScale scale;

  bool operator==(const CheckpointMeta&) const = default;
};

struct Checkpoint {
  CheckpointMeta meta;
  Network actor;
  Network critic;

  bool operator==(const Checkpoint&) const = default;
};

/// JSON document {meta, actor, critic}; layers are nested numeric arrays
/// keyed by layer name. Doubles are written in shortest round-trip form, so
/// save -> load -> save is byte-identical.
std::string to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace aoi
