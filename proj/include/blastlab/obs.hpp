#pragma once

#include <span>
#include <string>
#include <vector>

#include "blastlab/engine.hpp"

namespace blastlab {

// Fixed channels that follow the C per-color occupancy channels.
inline constexpr int kFixedChannels = 4;

// Board tensor in height x width x channels (HWC) order, matching the
// network input layout. Values are raw counts, not one-hot.
struct Observation {
  int width = 0;
  int height = 0;
  int colors = 0;
  std::vector<float> tensor;  // height * width * channels
  std::vector<bool> mask;     // height * width
  std::vector<std::string> channelLegend;

  int channels() const { return colors + kFixedChannels; }
  float at(int x, int y, int ch) const { return tensor[(y * width + x) * channels() + ch]; }
  bool operator==(const Observation&) const = default;
};

// color0..color{C-1}, clickableFalse, isCollectGoal, teleporter, containerOccupied
std::vector<std::string> channel_legend(int colors);

// `colors` sets the number of color channels; 0 means the level's color
// count. A larger value pads with empty channels so levels with different
// palettes share one tensor shape.
Observation encode(const Board& board, const Level& level, const GoalCounts& progress = {},
                   int colors = 0);
Observation encode(const Game& game, int colors = 0);

// out channel perm[c] receives input color channel c.
Observation shuffle_colors(const Observation& obs, std::span<const int> perm);
void shuffle_colors_inplace(Observation& obs, std::span<const int> perm);

std::vector<int> random_permutation(int n, Rng& rng);
std::vector<int> inverse_permutation(std::span<const int> perm);

}  // namespace blastlab
