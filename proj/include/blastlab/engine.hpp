#pragma once

// Click-to-blast puzzle simulation.
//
// Grids are stored row-major with y = 0 as the top row: cell (x, y) lives
// at index y * width + x. Gravity pulls pieces towards larger y.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "blastlab/rng.hpp"

namespace blastlab {

inline constexpr int kMaxColors = 6;
inline constexpr int kMinClusterSize = 2;
inline constexpr int kDefaultWidth = 9;
inline constexpr int kDefaultHeight = 13;

enum class PieceType : uint8_t { Empty, Color, Rock, Grass, Container, Teleporter };
enum class PortalRole : uint8_t { Entry, Exit };

struct Piece {
  PieceType type = PieceType::Empty;
  uint8_t color = 0;  // Color only
  uint8_t hp = 0;     // Rock only; container hp lives on the Board
  PortalRole role = PortalRole::Entry;
  uint16_t id = 0;    // container id or teleporter pair id

  static constexpr Piece empty() { return {}; }
  static constexpr Piece make_color(int c) {
    return {PieceType::Color, static_cast<uint8_t>(c), 0, PortalRole::Entry, 0};
  }
  static constexpr Piece rock(int hp) {
    return {PieceType::Rock, 0, static_cast<uint8_t>(hp), PortalRole::Entry, 0};
  }
  static constexpr Piece grass() { return {PieceType::Grass, 0, 0, PortalRole::Entry, 0}; }
  static constexpr Piece container(int id) {
    return {PieceType::Container, 0, 0, PortalRole::Entry, static_cast<uint16_t>(id)};
  }
  static constexpr Piece teleporter(int pair, PortalRole role) {
    return {PieceType::Teleporter, 0, 0, role, static_cast<uint16_t>(pair)};
  }

  constexpr bool is_color() const { return type == PieceType::Color; }
  constexpr bool is_empty() const { return type == PieceType::Empty; }
  // Cells that gravity may move pieces into or out of.
  constexpr bool is_open() const {
    return type == PieceType::Empty || type == PieceType::Color || type == PieceType::Rock;
  }

  friend constexpr bool operator==(const Piece& a, const Piece& b) {
    if (a.type != b.type) return false;
    switch (a.type) {
      case PieceType::Color: return a.color == b.color;
      case PieceType::Rock: return a.hp == b.hp;
      case PieceType::Container: return a.id == b.id;
      case PieceType::Teleporter: return a.id == b.id && a.role == b.role;
      default: return true;
    }
  }
};

std::string to_string(const Piece& p);

enum class GoalType : uint8_t { CollectColor, ClearRock, ClearGrass, ClearContainer };

// A goal kind. `color` is only meaningful for CollectColor.
struct GoalKind {
  GoalType type = GoalType::CollectColor;
  uint8_t color = 0;

  static constexpr GoalKind collect(int c) { return {GoalType::CollectColor, static_cast<uint8_t>(c)}; }
  static constexpr GoalKind rocks() { return {GoalType::ClearRock, 0}; }
  static constexpr GoalKind grass() { return {GoalType::ClearGrass, 0}; }
  static constexpr GoalKind containers() { return {GoalType::ClearContainer, 0}; }

  friend constexpr auto operator<=>(const GoalKind& a, const GoalKind& b) {
    if (a.type != b.type) return a.type <=> b.type;
    if (a.type != GoalType::CollectColor) return std::strong_ordering::equal;
    return a.color <=> b.color;
  }
  friend constexpr bool operator==(const GoalKind& a, const GoalKind& b) {
    return (a <=> b) == 0;
  }
};

// "collect-color:2", "clear-rock", ...
std::string to_string(const GoalKind& g);
GoalKind parse_goal_kind(const std::string& s);

using GoalCounts = std::map<GoalKind, int>;

struct Level {
  std::string id;
  int width = kDefaultWidth;
  int height = kDefaultHeight;
  std::vector<Piece> layout;           // width * height, row-major
  std::map<int, int> containerHp;      // initial hp per container id
  int moveLimit = 1;
  GoalCounts goals;
  int colorCount = 4;
  std::vector<double> refillWeights;   // one per color, sums to 1

  int cell_count() const { return width * height; }
  int total_goal_requirement() const;
  bool operator==(const Level&) const = default;
};

struct Board {
  int width = 0;
  int height = 0;
  std::vector<Piece> cells;
  std::map<int, int> containerHp;
  std::vector<double> refillWeights;
  Rng rng;

  int size() const { return width * height; }
  int index(int x, int y) const { return y * width + x; }
  const Piece& at(int x, int y) const { return cells[index(x, y)]; }
  Piece& at(int x, int y) { return cells[index(x, y)]; }

  bool operator==(const Board&) const = default;
};

struct BlockerHit {
  bool isContainer = false;
  int pos = -1;          // rock position
  int containerId = -1;  // container id
  int hpDelta = -1;
  bool operator==(const BlockerHit&) const = default;
};

struct Teleport {
  int from = -1;
  int to = -1;
  bool operator==(const Teleport&) const = default;
};

struct Refill {
  int pos = -1;
  int color = 0;
  bool operator==(const Refill&) const = default;
};

struct MoveOutcome {
  std::vector<std::pair<int, Piece>> removedCells;
  std::vector<BlockerHit> blockerDamage;
  GoalCounts goalsCollected;
  std::vector<int> grassSpread;
  std::vector<Teleport> teleported;
  std::vector<Refill> refilled;

  void clear();
  bool operator==(const MoveOutcome&) const = default;
};

using Cluster = std::vector<int>;

// Builds the starting board: copies the layout, lets pieces settle under
// gravity, refills open cells and reshuffles a dead deal.
Board make_board(const Level& level, uint64_t seed);

// Maximal 4-connected same-color groups, singletons included. Clusters are
// ordered by their smallest cell index; cells inside a cluster ascend.
std::vector<Cluster> find_clusters(const Board& board);

// Per-cell cluster size (0 for non-color cells).
std::vector<int> cluster_sizes(const Board& board);

std::vector<bool> valid_actions(const Board& board);
bool has_valid_action(const Board& board);

// In-place move resolution; `out` is cleared first.
void apply_move_inplace(Board& board, int pos, MoveOutcome& out);
std::pair<Board, MoveOutcome> apply_move(const Board& board, int pos);

// Cell of a largest cluster with the lowest row-major index, or -1 on a dead
// board.
int greedy_action(const Board& board);

// Gravity and refill sub-steps of a move, exposed for tests and settling.
void apply_gravity(Board& board, MoveOutcome* out = nullptr);
void refill(Board& board, MoveOutcome* out = nullptr);

bool is_won(const GoalCounts& progress, const GoalCounts& goals);

inline constexpr int kShuffleRetryCap = 100;
Board shuffle_dead_board(const Board& board, int retryCap = kShuffleRetryCap);
void shuffle_dead_board_inplace(Board& board, int retryCap = kShuffleRetryCap);

// Structural problems in a teleporter/gravity layout: unpaired teleporters
// or feed loops. Empty string when fine.
std::string check_gravity_topology(int width, int height, std::span<const Piece> cells);

// A level attempt in progress: board plus goal bookkeeping.
class Game {
 public:
  Game(const Level& level, uint64_t seed);

  const Level& level() const { return *level_; }
  const Board& board() const { return board_; }
  const GoalCounts& progress() const { return progress_; }
  int moves() const { return moves_; }
  bool won() const { return won_; }
  // Set when the board went dead and could not be reshuffled.
  bool stuck() const { return stuck_; }
  bool finished() const { return won_ || stuck_; }

  // Remaining required count for a goal (0 when met or absent).
  int remaining(const GoalKind& g) const;

  // Goal progress made by the move that counts towards the level goals,
  // capped at each goal's outstanding requirement.
  struct StepResult {
    int goalItems = 0;
    bool won = false;
  };
  StepResult step(int pos);
  const MoveOutcome& last_outcome() const { return outcome_; }
  const std::vector<bool>& mask() const { return mask_; }

 private:
  void refresh_mask();

  const Level* level_;
  Board board_;
  GoalCounts progress_;
  MoveOutcome outcome_;
  std::vector<bool> mask_;
  int moves_ = 0;
  bool won_ = false;
  bool stuck_ = false;
};

}  // namespace blastlab
