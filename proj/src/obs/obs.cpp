#include "blastlab/obs.hpp"

#include <algorithm>
#include <numeric>

#include "blastlab/error.hpp"

namespace blastlab {

std::vector<std::string> channel_legend(int colors) {
  std::vector<std::string> legend;
  for (int c = 0; c < colors; ++c) legend.push_back("color" + std::to_string(c));
  legend.insert(legend.end(), {"clickableFalse", "isCollectGoal", "teleporter", "containerOccupied"});
  return legend;
}

Observation encode(const Board& board, const Level& level, const GoalCounts& progress, int colors) {
  if (colors == 0) colors = level.colorCount;
  if (colors < level.colorCount || colors > kMaxColors) {
    throw ShapeError("observation needs at least " + std::to_string(level.colorCount) + " color channels");
  }
  if (board.width != level.width || board.height != level.height ||
      static_cast<int>(board.cells.size()) != board.width * board.height) {
    throw ShapeError("board dimensions do not match level " + level.id);
  }
  auto remaining = [&](const GoalKind& g) {
    auto it = level.goals.find(g);
    if (it == level.goals.end()) return 0;
    auto p = progress.find(g);
    return std::max(0, it->second - (p == progress.end() ? 0 : p->second));
  };
  Observation obs;
  obs.width = board.width;
  obs.height = board.height;
  obs.colors = colors;
  obs.channelLegend = channel_legend(colors);
  const int ch = obs.channels();
  const int C = obs.colors;
  obs.tensor.assign(static_cast<std::size_t>(board.size()) * ch, 0.0f);

  int color_left[kMaxColors] = {};
  for (int c = 0; c < level.colorCount; ++c) color_left[c] = remaining(GoalKind::collect(c));
  const bool rock_goal = remaining(GoalKind::rocks()) > 0;
  const bool grass_goal = remaining(GoalKind::grass()) > 0;
  const bool container_goal = remaining(GoalKind::containers()) > 0;

  for (int p = 0; p < board.size(); ++p) {
    float* v = &obs.tensor[static_cast<std::size_t>(p) * ch];
    const Piece& piece = board.cells[p];
    switch (piece.type) {
      case PieceType::Color:
        if (piece.color < C) {
          v[piece.color] = 1.0f;
          v[C + 1] = static_cast<float>(color_left[piece.color]);
        }
        break;
      case PieceType::Rock:
        v[C] = piece.hp;
        if (rock_goal) v[C + 1] = piece.hp;
        break;
      case PieceType::Grass:
        v[C] = 1.0f;
        if (grass_goal) v[C + 1] = 1.0f;
        break;
      case PieceType::Container: {
        auto it = board.containerHp.find(piece.id);
        float hp = it == board.containerHp.end() ? 0.0f : static_cast<float>(it->second);
        v[C] = hp;
        if (container_goal) v[C + 1] = hp;
        v[C + 3] = 1.0f;
        break;
      }
      case PieceType::Teleporter: v[C + 2] = 1.0f; break;
      case PieceType::Empty: break;
    }
  }
  obs.mask = valid_actions(board);
  return obs;
}

Observation encode(const Game& game, int colors) {
  return encode(game.board(), game.level(), game.progress(), colors);
}

void shuffle_colors_inplace(Observation& obs, std::span<const int> perm) {
  const int C = obs.colors;
  if (static_cast<int>(perm.size()) != C) throw ContractError("BadPermutation: wrong length");
  std::vector<char> seen(C, 0);
  for (int v : perm) {
    if (v < 0 || v >= C || seen[v]) throw ContractError("BadPermutation: not a bijection");
    seen[v] = 1;
  }
  const int ch = obs.channels();
  float tmp[kMaxColors];
  for (std::size_t base = 0; base < obs.tensor.size(); base += ch) {
    for (int c = 0; c < C; ++c) tmp[perm[c]] = obs.tensor[base + c];
    std::copy(tmp, tmp + C, obs.tensor.begin() + static_cast<std::ptrdiff_t>(base));
  }
}

Observation shuffle_colors(const Observation& obs, std::span<const int> perm) {
  Observation out = obs;
  shuffle_colors_inplace(out, perm);
  return out;
}

std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

std::vector<int> inverse_permutation(std::span<const int> perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
  return inv;
}

}  // namespace blastlab
