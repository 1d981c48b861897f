#include "blastlab/engine.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "blastlab/error.hpp"

namespace blastlab {

namespace {

constexpr int kSpawn = -1;
constexpr int kNoFeed = -2;

// Labels every color cell with a cluster id; returns the cluster sizes.
// labels[i] = -1 for non-color cells.
int label_clusters(const Board& b, std::vector<int>& labels, std::vector<int>& sizes,
                   std::vector<int>& stack) {
  const int n = b.size();
  labels.assign(n, -1);
  sizes.clear();
  stack.clear();
  int next = 0;
  for (int start = 0; start < n; ++start) {
    if (labels[start] >= 0 || !b.cells[start].is_color()) continue;
    const uint8_t color = b.cells[start].color;
    int count = 0;
    labels[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      int p = stack.back();
      stack.pop_back();
      ++count;
      int x = p % b.width;
      int y = p / b.width;
      auto visit = [&](int q) {
        if (labels[q] < 0 && b.cells[q].is_color() && b.cells[q].color == color) {
          labels[q] = next;
          stack.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < b.width) visit(p + 1);
      if (y > 0) visit(p - b.width);
      if (y + 1 < b.height) visit(p + b.width);
    }
    sizes.push_back(count);
    ++next;
  }
  return next;
}

template <class Fn>
void for_each_neighbor(int width, int height, int p, Fn&& fn) {
  int x = p % width;
  int y = p / width;
  if (y > 0) fn(p - width);
  if (x > 0) fn(p - 1);
  if (x + 1 < width) fn(p + 1);
  if (y + 1 < height) fn(p + width);
}

// Position of the paired teleporter with the opposite role, or -1.
int find_partner(std::span<const Piece> cells, int p) {
  const Piece& t = cells[p];
  for (int q = 0; q < static_cast<int>(cells.size()); ++q) {
    const Piece& c = cells[q];
    if (q != p && c.type == PieceType::Teleporter && c.id == t.id && c.role != t.role) return q;
  }
  return -1;
}

// Cell that feeds pieces into the open cell directly below `above`.
// `above` may be negative (off the top edge).
int resolve_feed(int width, std::span<const Piece> cells, int above, int depth) {
  if (above < 0) return kSpawn;
  if (depth > static_cast<int>(cells.size())) return kNoFeed;
  const Piece& q = cells[above];
  if (q.is_open()) return above;
  if (q.type == PieceType::Teleporter && q.role == PortalRole::Exit) {
    int entry = find_partner(cells, above);
    if (entry < 0) return kNoFeed;
    return resolve_feed(width, cells, entry - width, depth + 1);
  }
  return kNoFeed;
}

struct Chain {
  std::vector<int> cells;  // bottom to top
  int source = kNoFeed;    // kSpawn or kNoFeed
};

// Decomposes the open cells into feed chains. Returns false on a loop.
bool build_chains(int width, int height, std::span<const Piece> cells, std::vector<Chain>& chains) {
  const int n = width * height;
  std::vector<int> feed(n, kNoFeed);
  std::vector<char> consumed(n, 0);
  for (int p = 0; p < n; ++p) {
    if (!cells[p].is_open()) continue;
    feed[p] = resolve_feed(width, cells, p - width, 0);
    if (feed[p] >= 0) {
      if (consumed[feed[p]]) return false;
      consumed[feed[p]] = 1;
    }
  }
  chains.clear();
  std::vector<char> seen(n, 0);
  for (int p = 0; p < n; ++p) {
    if (!cells[p].is_open() || consumed[p]) continue;
    Chain chain;
    int cur = p;
    while (cur >= 0) {
      if (seen[cur]) return false;
      seen[cur] = 1;
      chain.cells.push_back(cur);
      if (feed[cur] < 0) {
        chain.source = feed[cur];
        break;
      }
      cur = feed[cur];
    }
    chains.push_back(std::move(chain));
  }
  // Open cells never reached from a bottom sit on a feed loop.
  for (int p = 0; p < n; ++p) {
    if (cells[p].is_open() && !seen[p]) return false;
  }
  (void)height;
  return true;
}

void chains_or_throw(const Board& b, std::vector<Chain>& chains) {
  if (!build_chains(b.width, b.height, b.cells, chains)) {
    throw ContractError("board gravity topology contains a feed loop");
  }
}

int draw_color(Board& b) {
  std::discrete_distribution<int> dist(b.refillWeights.begin(), b.refillWeights.end());
  return dist(b.rng);
}

}  // namespace

std::string to_string(const Piece& p) {
  switch (p.type) {
    case PieceType::Empty: return "Empty";
    case PieceType::Color: return "Color(" + std::to_string(p.color) + ")";
    case PieceType::Rock: return "Rock(" + std::to_string(p.hp) + ")";
    case PieceType::Grass: return "Grass";
    case PieceType::Container: return "Container(" + std::to_string(p.id) + ")";
    case PieceType::Teleporter:
      return std::string("Teleporter(") + std::to_string(p.id) +
             (p.role == PortalRole::Entry ? ",entry)" : ",exit)");
  }
  return "?";
}

std::string to_string(const GoalKind& g) {
  switch (g.type) {
    case GoalType::CollectColor: return "collect-color:" + std::to_string(g.color);
    case GoalType::ClearRock: return "clear-rock";
    case GoalType::ClearGrass: return "clear-grass";
    case GoalType::ClearContainer: return "clear-container";
  }
  return "?";
}

GoalKind parse_goal_kind(const std::string& s) {
  if (s == "clear-rock") return GoalKind::rocks();
  if (s == "clear-grass") return GoalKind::grass();
  if (s == "clear-container") return GoalKind::containers();
  const std::string prefix = "collect-color:";
  if (s.rfind(prefix, 0) == 0 && s.size() == prefix.size() + 1) {
    char c = s.back();
    if (c >= '0' && c < '0' + kMaxColors) return GoalKind::collect(c - '0');
  }
  throw DataError("unknown goal kind '" + s + "'");
}

int Level::total_goal_requirement() const {
  int total = 0;
  for (const auto& [kind, count] : goals) total += count;
  return total;
}

void MoveOutcome::clear() {
  removedCells.clear();
  blockerDamage.clear();
  goalsCollected.clear();
  grassSpread.clear();
  teleported.clear();
  refilled.clear();
}

std::string check_gravity_topology(int width, int height, std::span<const Piece> cells) {
  for (int p = 0; p < static_cast<int>(cells.size()); ++p) {
    const Piece& c = cells[p];
    if (c.type != PieceType::Teleporter) continue;
    int partners = 0;
    int same = 0;
    for (int q = 0; q < static_cast<int>(cells.size()); ++q) {
      const Piece& d = cells[q];
      if (d.type != PieceType::Teleporter || d.id != c.id) continue;
      if (d.role != c.role) ++partners;
      else ++same;
    }
    if (partners != 1 || same != 1) {
      return "teleporter pair " + std::to_string(c.id) + " must have exactly one entry and one exit";
    }
  }
  std::vector<Chain> chains;
  if (!build_chains(width, height, cells, chains)) return "teleporters form a gravity feed loop";
  return {};
}

std::vector<Cluster> find_clusters(const Board& board) {
  std::vector<int> labels, sizes, stack;
  int count = label_clusters(board, labels, sizes, stack);
  std::vector<Cluster> clusters(count);
  for (int i = 0; i < count; ++i) clusters[i].reserve(sizes[i]);
  for (int p = 0; p < board.size(); ++p) {
    if (labels[p] >= 0) clusters[labels[p]].push_back(p);
  }
  return clusters;
}

std::vector<int> cluster_sizes(const Board& board) {
  std::vector<int> labels, sizes, stack;
  label_clusters(board, labels, sizes, stack);
  std::vector<int> out(board.size(), 0);
  for (int p = 0; p < board.size(); ++p) {
    if (labels[p] >= 0) out[p] = sizes[labels[p]];
  }
  return out;
}

std::vector<bool> valid_actions(const Board& board) {
  std::vector<int> sizes = cluster_sizes(board);
  std::vector<bool> mask(board.size());
  for (int p = 0; p < board.size(); ++p) mask[p] = sizes[p] >= kMinClusterSize;
  return mask;
}

int greedy_action(const Board& board) {
  std::vector<int> sizes = cluster_sizes(board);
  int best = -1;
  for (int p = 0; p < board.size(); ++p) {
    if (sizes[p] >= kMinClusterSize && (best < 0 || sizes[p] > sizes[best])) best = p;
  }
  return best;
}

bool has_valid_action(const Board& b) {
  for (int y = 0; y < b.height; ++y) {
    for (int x = 0; x < b.width; ++x) {
      const Piece& c = b.at(x, y);
      if (!c.is_color()) continue;
      if (x + 1 < b.width && b.at(x + 1, y).is_color() && b.at(x + 1, y).color == c.color) return true;
      if (y + 1 < b.height && b.at(x, y + 1).is_color() && b.at(x, y + 1).color == c.color) return true;
    }
  }
  return false;
}

void apply_gravity(Board& b, MoveOutcome* out) {
  std::vector<Chain> chains;
  chains_or_throw(b, chains);
  std::vector<std::pair<int, Piece>> moving;  // (chain index, piece)
  for (const Chain& chain : chains) {
    const auto& cs = chain.cells;
    moving.clear();
    for (int i = 0; i < static_cast<int>(cs.size()); ++i) {
      const Piece& piece = b.cells[cs[i]];
      if (!piece.is_empty()) moving.emplace_back(i, piece);
    }
    for (int k = 0; k < static_cast<int>(moving.size()); ++k) {
      auto [from, piece] = moving[k];
      if (from != k && out != nullptr) {
        // A link i -> i+1 is a teleport when cell i+1 is not directly above i.
        for (int i = k; i < from; ++i) {
          if (cs[i + 1] != cs[i] - b.width) {
            out->teleported.push_back({cs[from], cs[k]});
            break;
          }
        }
      }
      b.cells[cs[k]] = piece;
    }
    for (int k = static_cast<int>(moving.size()); k < static_cast<int>(cs.size()); ++k) {
      b.cells[cs[k]] = Piece::empty();
    }
  }
}

void refill(Board& b, MoveOutcome* out) {
  std::vector<Chain> chains;
  chains_or_throw(b, chains);
  for (const Chain& chain : chains) {
    if (chain.source != kSpawn) continue;
    for (int p : chain.cells) {
      if (!b.cells[p].is_empty()) continue;
      int color = draw_color(b);
      b.cells[p] = Piece::make_color(color);
      if (out != nullptr) out->refilled.push_back({p, color});
    }
  }
}

void apply_move_inplace(Board& b, int pos, MoveOutcome& out) {
  out.clear();
  if (pos < 0 || pos >= b.size() || !b.cells[pos].is_color()) {
    throw InvalidAction("cell " + std::to_string(pos) + " holds no color piece");
  }
  const int n = b.size();

  // (1) remove the cluster
  std::vector<char> in_cluster(n, 0);
  std::vector<int> cluster{pos};
  in_cluster[pos] = 1;
  const uint8_t color = b.cells[pos].color;
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    for_each_neighbor(b.width, b.height, cluster[i], [&](int q) {
      if (!in_cluster[q] && b.cells[q].is_color() && b.cells[q].color == color) {
        in_cluster[q] = 1;
        cluster.push_back(q);
      }
    });
  }
  if (static_cast<int>(cluster.size()) < kMinClusterSize) {
    throw InvalidAction("cell " + std::to_string(pos) + " is a singleton");
  }
  std::sort(cluster.begin(), cluster.end());
  for (int p : cluster) {
    out.removedCells.emplace_back(p, b.cells[p]);
    b.cells[p] = Piece::empty();
  }
  out.goalsCollected[GoalKind::collect(color)] += static_cast<int>(cluster.size());

  // (2) blocker damage, once per blocker per move
  std::vector<char> hit(n, 0);
  for (int p : cluster) {
    for_each_neighbor(b.width, b.height, p, [&](int q) { hit[q] = 1; });
  }
  std::vector<int> hit_containers;
  bool grass_adjacent = false;
  for (int q = 0; q < n; ++q) {
    if (!hit[q]) continue;
    Piece& c = b.cells[q];
    if (c.type == PieceType::Rock) {
      out.blockerDamage.push_back({false, q, -1, -1});
      if (c.hp <= 1) {
        out.removedCells.emplace_back(q, c);
        c = Piece::empty();
        out.goalsCollected[GoalKind::rocks()] += 1;
      } else {
        c.hp -= 1;
      }
    } else if (c.type == PieceType::Container) {
      if (std::find(hit_containers.begin(), hit_containers.end(), c.id) == hit_containers.end()) {
        hit_containers.push_back(c.id);
      }
    } else if (c.type == PieceType::Grass) {
      grass_adjacent = true;
    }
  }
  std::sort(hit_containers.begin(), hit_containers.end());
  for (int id : hit_containers) {
    int& hp = b.containerHp[id];
    hp -= 1;
    out.blockerDamage.push_back({true, -1, id, -1});
    if (hp <= 0) {
      b.containerHp.erase(id);
      for (int q = 0; q < n; ++q) {
        if (b.cells[q].type == PieceType::Container && b.cells[q].id == id) {
          out.removedCells.emplace_back(q, b.cells[q]);
          b.cells[q] = Piece::empty();
        }
      }
      out.goalsCollected[GoalKind::containers()] += 1;
    }
  }

  // (3) grass: cleared when adjacent, otherwise it spreads one cell
  if (grass_adjacent) {
    for (int q = 0; q < n; ++q) {
      if (hit[q] && b.cells[q].type == PieceType::Grass) {
        out.removedCells.emplace_back(q, b.cells[q]);
        b.cells[q] = Piece::empty();
        out.goalsCollected[GoalKind::grass()] += 1;
      }
    }
  } else {
    std::vector<char> candidate(n, 0);
    bool any = false;
    for (int q = 0; q < n; ++q) {
      if (b.cells[q].type != PieceType::Grass) continue;
      for_each_neighbor(b.width, b.height, q, [&](int r) {
        if (b.cells[r].is_empty() || b.cells[r].is_color()) {
          candidate[r] = 1;
          any = true;
        }
      });
    }
    if (any) {
      std::vector<int> targets;
      for (int q = 0; q < n; ++q) {
        if (candidate[q]) targets.push_back(q);
      }
      int target = targets[uniform_index(b.rng, static_cast<int>(targets.size()))];
      b.cells[target] = Piece::grass();
      out.grassSpread.push_back(target);
    }
  }

  // (4) gravity, (5) refill
  apply_gravity(b, &out);
  refill(b, &out);
}

std::pair<Board, MoveOutcome> apply_move(const Board& board, int pos) {
  std::pair<Board, MoveOutcome> result{board, {}};
  apply_move_inplace(result.first, pos, result.second);
  return result;
}

bool is_won(const GoalCounts& progress, const GoalCounts& goals) {
  for (const auto& [kind, required] : goals) {
    auto it = progress.find(kind);
    int have = it == progress.end() ? 0 : it->second;
    if (have < required) return false;
  }
  return true;
}

void shuffle_dead_board_inplace(Board& b, int retryCap) {
  if (has_valid_action(b)) throw ContractError("shuffle_dead_board called on a live board");
  std::vector<int> positions;
  std::vector<uint8_t> colors;
  for (int p = 0; p < b.size(); ++p) {
    if (b.cells[p].is_color()) {
      positions.push_back(p);
      colors.push_back(b.cells[p].color);
    }
  }
  const std::vector<uint8_t> original = colors;
  for (int attempt = 0; attempt < retryCap; ++attempt) {
    std::shuffle(colors.begin(), colors.end(), b.rng);
    for (std::size_t i = 0; i < positions.size(); ++i) b.cells[positions[i]].color = colors[i];
    if (has_valid_action(b)) return;
  }
  for (std::size_t i = 0; i < positions.size(); ++i) b.cells[positions[i]].color = original[i];
  throw Unresolvable("no valid deal found within " + std::to_string(retryCap) + " shuffles");
}

Board shuffle_dead_board(const Board& board, int retryCap) {
  Board b = board;
  shuffle_dead_board_inplace(b, retryCap);
  return b;
}

Board make_board(const Level& level, uint64_t seed) {
  Board b;
  b.width = level.width;
  b.height = level.height;
  b.cells = level.layout;
  b.containerHp = level.containerHp;
  b.refillWeights = level.refillWeights;
  b.rng.seed(seed);
  if (static_cast<int>(b.cells.size()) != b.size()) {
    throw ContractError("level layout size does not match its dimensions");
  }
  apply_gravity(b);
  refill(b);
  if (!has_valid_action(b)) {
    try {
      shuffle_dead_board_inplace(b);
    } catch (const Unresolvable&) {
      // left dead; Game reports it as stuck
    }
  }
  return b;
}

Game::Game(const Level& level, uint64_t seed) : level_(&level), board_(make_board(level, seed)) {
  won_ = is_won(progress_, level.goals);
  refresh_mask();
}

int Game::remaining(const GoalKind& g) const {
  auto it = level_->goals.find(g);
  if (it == level_->goals.end()) return 0;
  auto p = progress_.find(g);
  int have = p == progress_.end() ? 0 : p->second;
  return std::max(0, it->second - have);
}

Game::StepResult Game::step(int pos) {
  if (finished()) throw ContractError("step on a finished game");
  if (pos < 0 || pos >= board_.size() || !mask_[pos]) {
    throw InvalidAction("cell " + std::to_string(pos) + " is masked");
  }
  GoalCounts before;
  for (const auto& [kind, req] : level_->goals) before[kind] = remaining(kind);
  apply_move_inplace(board_, pos, outcome_);
  ++moves_;
  for (const auto& [kind, count] : outcome_.goalsCollected) progress_[kind] += count;
  StepResult r;
  for (const auto& [kind, req] : level_->goals) r.goalItems += before[kind] - remaining(kind);
  won_ = is_won(progress_, level_->goals);
  r.won = won_;
  if (!won_ && !has_valid_action(board_)) {
    try {
      shuffle_dead_board_inplace(board_);
    } catch (const Unresolvable&) {
      stuck_ = true;
    }
  }
  refresh_mask();
  return r;
}

void Game::refresh_mask() {
  mask_ = valid_actions(board_);
  if (!won_ && !stuck_ && std::none_of(mask_.begin(), mask_.end(), [](bool v) { return v; })) {
    stuck_ = true;
  }
}

}  // namespace blastlab
