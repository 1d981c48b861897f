#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "blastlab/nn/network.hpp"

namespace blastlab::nn {

inline constexpr uint32_t kCheckpointVersion = 1;

// Self-describing policy snapshot. On disk: "BLCKPT01" magic, version,
// channel legend, network shape, metadata pairs, a shape table, then each
// tensor as raw little-endian float32 in table order.
struct Checkpoint {
  std::vector<std::string> channelLegend;
  NetworkParams<float> params;
  std::map<std::string, std::string> metadata;

  bool operator==(const Checkpoint&) const = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace blastlab::nn
