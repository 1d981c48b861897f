#pragma once

// Synthetic player population standing in for real completion-rate data.
// Each player has a skill s ~ Beta(alpha, beta); on every move they tap the
// greedy choice with probability s and a uniformly random valid cell
// otherwise, failing once the level's move limit is used up.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "blastlab/engine.hpp"

namespace blastlab {

struct PopulationSpec {
  int nPlayers = 200;
  int attemptsPerPlayer = 5;
  double alpha = 2.0;
  double beta = 2.0;
  uint64_t seed = 1;

  // Throws DataError when unusable.
  void validate() const;
  // Non-fatal problems, e.g. too few attempts per level for stable rates.
  std::vector<std::string> warnings() const;
};

struct RateRow {
  std::string levelId;
  long completions = 0;
  long attempts = 0;
  double rate = 0.0;
};

struct CompletionRateTable {
  std::vector<RateRow> rows;
  std::map<std::string, double> rates() const;
};

uint64_t level_id_hash(const std::string& id);

// Skill of player p, fixed for the whole population run.
double player_skill(const PopulationSpec& spec, int player);

// One attempt; true when the goals are met within the move limit.
bool simulate_attempt(const Level& level, double skill, uint64_t seed);

CompletionRateTable simulate_population(const std::vector<Level>& levels, const PopulationSpec& spec, int jobs = 1);

void write_rates_csv(const CompletionRateTable& t, const std::filesystem::path& path,
                     const std::string& configNote = "");
// Accepts synthetic or externally supplied tables in the same schema.
CompletionRateTable read_rates_csv(const std::filesystem::path& path);

}  // namespace blastlab
