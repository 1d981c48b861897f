#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blastlab/agents.hpp"
#include "blastlab/engine.hpp"

namespace blastlab {

struct EpisodeRecord {
  std::string levelId;
  std::string agentId;
  uint64_t seed = 0;
  int movesTaken = 0;
  bool completed = false;
  int moveCap = 0;
  int moveLimit = 0;  // the level's limit, kept for normalization
  bool operator==(const EpisodeRecord&) const = default;
};

// Episode i deals seed derive_seed(baseSeed, i) and plays until the goals
// are met, the board is stuck, or moveCap moves were made.
std::vector<EpisodeRecord> run_episodes(const Agent& agent, const Level& level, int nEpisodes, int moveCap,
                                        uint64_t baseSeed, int jobs = 1);

struct LevelStat {
  std::string levelId;
  double x = 1.0;
  double normalizedBestX = 0.0;
  double completedFraction = 0.0;
  int episodeCount = 0;
};

// Max moves among the fastest ceil(x * nCompleted) completed runs, over the
// move limit. Throws InsufficientData when nothing completed.
LevelStat best_fraction_stat(const std::vector<EpisodeRecord>& records, double x, int moveLimit);

// Tie-aware ranks (1-based, ties get their average rank).
std::vector<double> average_ranks(const std::vector<double>& v);
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);
// Throws DegenerateInput when a series is constant, DataError on size problems.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

inline const std::vector<double> kDefaultXGrid = {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};

struct SweepPoint {
  double x = 0.0;
  std::optional<double> rho;  // empty when undefined at this x
  int levelsUsed = 0;
  std::string note;
};

struct LevelRow {
  std::string levelId;
  std::optional<double> completionRate;
  std::map<double, double> statByX;  // only x values where the stat exists
  int episodes = 0;
  int completed = 0;
  std::string note;
};

struct CorrelationReport {
  std::vector<SweepPoint> sweep;
  std::vector<LevelRow> levels;
  std::map<std::string, std::string> metadata;
  // Index into sweep of the largest |rho|; empty when every x is undefined.
  std::optional<std::size_t> best_index() const;
};

// Per level: episode records (any number of levels). Completion rates come
// from players (possibly synthetic). Levels missing either side are listed
// with a note and left out of the correlation.
CorrelationReport correlation_sweep(const std::map<std::string, std::vector<EpisodeRecord>>& recordsByLevel,
                                    const std::map<std::string, double>& completionRates,
                                    const std::vector<double>& xGrid = kDefaultXGrid);

struct MoveHistogram {
  std::map<int, int> bins;                          // bin start -> completed runs
  std::vector<std::pair<int, double>> cumulative;   // (moves, fraction of all runs completed by then)
  int completed = 0;
  int censored = 0;
};

MoveHistogram move_distribution(const std::vector<EpisodeRecord>& records, int binWidth = 1);

// Median moves with every incomplete run counted at its cap; even counts
// average the two middle values.
double median_moves(const std::vector<EpisodeRecord>& records);

void write_episodes_csv(const std::vector<EpisodeRecord>& records, const std::filesystem::path& path,
                        const std::string& configNote = "");
std::vector<EpisodeRecord> read_episodes_csv(const std::filesystem::path& path);

// Writes sweep.csv, levels.csv and summary.txt into `dir`.
void write_correlation_report(const CorrelationReport& report, const std::filesystem::path& dir,
                              const std::string& configNote = "");

struct NamedHistogram {
  std::string levelId;
  std::string agentId;
  MoveHistogram hist;
};

// Histogram rows (agent, level, bin, count) and cumulative rows
// (agent, level, moves, fraction), plus one censored-count row per set.
void write_move_distributions(const std::vector<NamedHistogram>& hists, const std::filesystem::path& histPath,
                              const std::filesystem::path& cumPath, const std::string& configNote = "");

}  // namespace blastlab
