#pragma once

#include <string>
#include <vector>

#include "blastlab/engine.hpp"
#include "blastlab/levels.hpp"

namespace testutil {

using namespace blastlab;

// Rows top to bottom. '0'-'5' colors, '.' empty, 'R' rock hp1, 'T' rock
// hp2, 'g' grass, 'C' container 0, 'E'/'X' teleporter 0 entry/exit.
inline std::vector<Piece> parse_rows(const std::vector<std::string>& rows) {
  std::vector<Piece> cells;
  for (const auto& row : rows) {
    for (char c : row) {
      switch (c) {
        case '.': cells.push_back(Piece::empty()); break;
        case 'R': cells.push_back(Piece::rock(1)); break;
        case 'T': cells.push_back(Piece::rock(2)); break;
        case 'g': cells.push_back(Piece::grass()); break;
        case 'C': cells.push_back(Piece::container(0)); break;
        case 'E': cells.push_back(Piece::teleporter(0, PortalRole::Entry)); break;
        case 'X': cells.push_back(Piece::teleporter(0, PortalRole::Exit)); break;
        default: cells.push_back(Piece::make_color(c - '0'));
      }
    }
  }
  return cells;
}

inline Board board_from_rows(const std::vector<std::string>& rows, int colors = 2, uint64_t seed = 1) {
  Board b;
  b.height = static_cast<int>(rows.size());
  b.width = static_cast<int>(rows[0].size());
  b.cells = parse_rows(rows);
  b.refillWeights.assign(colors, 1.0 / colors);
  b.rng.seed(seed);
  for (const Piece& p : b.cells) {
    if (p.type == PieceType::Container) b.containerHp[p.id] = kDefaultContainerHp;
  }
  return b;
}

inline Level level_from_rows(const std::vector<std::string>& rows, int colors, GoalCounts goals, int moveLimit,
                             const std::string& id = "T001") {
  Level l;
  l.id = id;
  l.height = static_cast<int>(rows.size());
  l.width = static_cast<int>(rows[0].size());
  l.layout = parse_rows(rows);
  l.colorCount = colors;
  l.refillWeights.assign(colors, 1.0 / colors);
  l.goals = std::move(goals);
  l.moveLimit = moveLimit;
  for (const Piece& p : l.layout) {
    if (p.type == PieceType::Container) l.containerHp[p.id] = kDefaultContainerHp;
  }
  return l;
}

inline std::vector<int> true_cells(const std::vector<bool>& mask) {
  std::vector<int> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

// Random color board, with rocks/grass sprinkled in when `blockers`.
inline Board random_board(Rng& rng, int w, int h, int colors, bool blockers) {
  Board b;
  b.width = w;
  b.height = h;
  b.refillWeights.assign(colors, 1.0 / colors);
  b.rng.seed(rng());
  for (int i = 0; i < w * h; ++i) {
    double u = uniform01(rng);
    if (blockers && u < 0.08) {
      b.cells.push_back(Piece::rock(1 + uniform_index(rng, 3)));
    } else if (blockers && u < 0.12) {
      b.cells.push_back(Piece::grass());
    } else {
      b.cells.push_back(Piece::make_color(uniform_index(rng, colors)));
    }
  }
  return b;
}

}  // namespace testutil
