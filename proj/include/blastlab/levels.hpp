#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "blastlab/engine.hpp"

namespace blastlab {

inline constexpr int kLevelFormatVersion = 1;
inline constexpr int kDefaultContainerHp = 10;

// Throws ValidationError naming the first broken rule.
void validate_level(const Level& level);

std::string serialize_level(const Level& level);
// Parses and validates. Refill weights are renormalized to sum to one.
Level parse_level(const std::string& text);

Level load_level(const std::filesystem::path& path);
void save_level(const Level& level, const std::filesystem::path& path);

// All *.lvl files in a directory, sorted by file name.
std::vector<Level> load_level_set(const std::filesystem::path& dir);
void save_level_set(const std::vector<Level>& levels, const std::filesystem::path& dir);

enum class Mechanic : uint8_t { Rock, Grass, ToughRock, Container, Teleporter };

std::string to_string(Mechanic m);
Mechanic parse_mechanic(const std::string& s);

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct TierKnobs {
  RealRange blockerDensity{0.0, 0.0};  // fraction of cells holding blockers
  IntRange goalCount{10, 10};          // items required by the color goal
  IntRange colorCount{4, 4};
  IntRange moveLimit{20, 20};
};

struct CurriculumSpec {
  int width = kDefaultWidth;
  int height = kDefaultHeight;
  int tierSize = 10;        // level-number stride between tiers
  int perTierCount = 10;    // levels generated per tier
  // Mechanic introduced at each tier (nullopt = none). Its size is the
  // number of tiers.
  std::vector<std::optional<Mechanic>> tiers;
  std::vector<TierKnobs> knobs;  // one per tier
  uint64_t seed = 1;
  std::string idPrefix = "L";
  int retryBudget = 200;

  // Ten tiers: rock at tier 1, grass at 2, tough rocks at 3, difficulty
  // knobs rising linearly throughout.
  static CurriculumSpec standard(int width = kDefaultWidth, int height = kDefaultHeight,
                                 uint64_t seed = 1);
  // `count` single-level tiers with one monotone difficulty knob: the
  // color goal grows from goalLo to goalHi while the rest stays fixed.
  static CurriculumSpec ladder(int count, int width, int height, int goalLo, int goalHi,
                               int moveLimit, uint64_t seed);

  // Throws DataError when inconsistent.
  void validate() const;
  std::vector<Mechanic> mechanics_up_to(int tier) const;
};

struct LevelMeta {
  std::string levelId;
  int tier = 0;
  double blockerDensity = 0.0;
  int goalCount = 0;
  int colorCount = 0;
  int moveLimit = 0;
  std::vector<Mechanic> mechanics;
};

std::vector<Level> generate_curriculum(const CurriculumSpec& spec,
                                       std::vector<LevelMeta>* meta = nullptr);

// Levels mixing every training mechanic with `newMechanics`; each level
// includes at least one of the new mechanics when that set is non-empty.
// Knobs come from the last tier.
std::vector<Level> generate_eval_set(const CurriculumSpec& spec, int count,
                                     const std::vector<Mechanic>& newMechanics,
                                     std::vector<LevelMeta>* meta = nullptr);

// Depth-first search for a winning tap sequence of at most `maxDepth`
// moves from the board dealt by `seed`. Gives up after `nodeBudget` nodes.
std::optional<std::vector<int>> find_winning_sequence(const Level& level, uint64_t seed,
                                                      int maxDepth, long nodeBudget = 200000);

// Greedy play from `tries` derived seeds; true if any attempt wins within
// `factor` times the move limit.
bool greedy_certifies(const Level& level, uint64_t seed, int tries = 20, int factor = 3);

}  // namespace blastlab
