#include "blastlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "blastlab/error.hpp"
#include "blastlab/obs.hpp"
#include "blastlab/parallel.hpp"

namespace blastlab {

std::vector<EpisodeRecord> run_episodes(const Agent& agent, const Level& level, int nEpisodes, int moveCap,
                                        uint64_t baseSeed, int jobs) {
  if (nEpisodes < 1) throw DataError("nEpisodes must be at least 1");
  if (moveCap < 0) throw DataError("moveCap must be non-negative");
  std::vector<EpisodeRecord> out(nEpisodes);
  const std::string agentId = agent.id();
  parallel_for(static_cast<std::size_t>(nEpisodes), jobs, [&](std::size_t i) {
    const uint64_t seed = derive_seed(baseSeed, i);
    Game game(level, seed);
    Rng rng(mix64(seed ^ 0xa6e47ULL));
    while (!game.finished() && game.moves() < moveCap) {
      Observation obs = encode(game, agent.colors());
      game.step(agent.act(obs, rng));
    }
    EpisodeRecord& r = out[i];
    r.levelId = level.id;
    r.agentId = agentId;
    r.seed = seed;
    r.movesTaken = game.moves();
    r.completed = game.won();
    r.moveCap = moveCap;
    r.moveLimit = level.moveLimit;
  });
  return out;
}

LevelStat best_fraction_stat(const std::vector<EpisodeRecord>& records, double x, int moveLimit) {
  if (!(x > 0.0 && x <= 1.0)) throw DataError("best-fraction x must lie in (0, 1]");
  if (moveLimit < 1) throw DataError("move limit must be positive");
  std::vector<int> moves;
  for (const auto& r : records) {
    if (r.completed) moves.push_back(r.movesTaken);
  }
  LevelStat st;
  st.levelId = records.empty() ? "" : records.front().levelId;
  st.x = x;
  st.episodeCount = static_cast<int>(records.size());
  if (moves.empty()) throw InsufficientData("no completed runs for level '" + st.levelId + "'");
  st.completedFraction = static_cast<double>(moves.size()) / records.size();
  std::sort(moves.begin(), moves.end());
  // the small slack keeps round fractions like 0.2 * 10 from ceiling to 3
  const double raw = x * static_cast<double>(moves.size());
  std::size_t k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  k = std::clamp<std::size_t>(k, 1, moves.size());
  st.normalizedBestX = static_cast<double>(moves[k - 1]) / moveLimit;
  return st;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.empty()) throw DataError("pearson needs two series of equal, non-zero length");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("correlation undefined for a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw DataError("spearman needs series of equal length");
  if (xs.size() < 3) throw DegenerateInput("spearman needs at least 3 pairs");
  return pearson(average_ranks(xs), average_ranks(ys));
}

std::optional<std::size_t> CorrelationReport::best_index() const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (!sweep[i].rho) continue;
    if (!best || std::abs(*sweep[i].rho) > std::abs(*sweep[*best].rho)) best = i;
  }
  return best;
}

CorrelationReport correlation_sweep(const std::map<std::string, std::vector<EpisodeRecord>>& recordsByLevel,
                                    const std::map<std::string, double>& completionRates,
                                    const std::vector<double>& xGrid) {
  CorrelationReport rep;
  for (const auto& [id, records] : recordsByLevel) {
    LevelRow row;
    row.levelId = id;
    row.episodes = static_cast<int>(records.size());
    for (const auto& r : records) row.completed += r.completed;
    if (auto it = completionRates.find(id); it != completionRates.end()) {
      row.completionRate = it->second;
    } else {
      row.note = "no completion rate";
    }
    if (records.empty()) {
      row.note = "no episodes";
    } else if (row.completed == 0) {
      row.note = "no completed runs";
    } else {
      for (double x : xGrid) row.statByX[x] = best_fraction_stat(records, x, records.front().moveLimit).normalizedBestX;
    }
    rep.levels.push_back(std::move(row));
  }
  for (const auto& [id, rate] : completionRates) {
    if (!recordsByLevel.count(id)) {
      LevelRow row;
      row.levelId = id;
      row.completionRate = rate;
      row.note = "no episodes";
      rep.levels.push_back(std::move(row));
    }
  }
  std::sort(rep.levels.begin(), rep.levels.end(), [](const LevelRow& a, const LevelRow& b) { return a.levelId < b.levelId; });

  for (double x : xGrid) {
    SweepPoint pt;
    pt.x = x;
    std::vector<double> stats, rates;
    for (const auto& row : rep.levels) {
      auto it = row.statByX.find(x);
      if (it == row.statByX.end() || !row.completionRate) continue;
      stats.push_back(it->second);
      rates.push_back(*row.completionRate);
    }
    pt.levelsUsed = static_cast<int>(stats.size());
    if (pt.levelsUsed < 3) {
      pt.note = "fewer than 3 usable levels";
    } else {
      try {
        pt.rho = spearman(stats, rates);
      } catch (const DegenerateInput& e) {
        pt.note = e.what();
      }
    }
    const int dropped = static_cast<int>(rep.levels.size()) - pt.levelsUsed;
    if (dropped > 0 && pt.note.empty()) pt.note = std::to_string(dropped) + " level(s) dropped";
    rep.sweep.push_back(std::move(pt));
  }
  return rep;
}

MoveHistogram move_distribution(const std::vector<EpisodeRecord>& records, int binWidth) {
  if (binWidth < 1) throw DataError("bin width must be positive");
  MoveHistogram h;
  std::map<int, int> exact;
  for (const auto& r : records) {
    if (!r.completed) {
      ++h.censored;
      continue;
    }
    ++h.completed;
    ++exact[r.movesTaken];
    ++h.bins[(r.movesTaken / binWidth) * binWidth];
  }
  const double total = static_cast<double>(records.size());
  int running = 0;
  for (const auto& [moves, count] : exact) {
    running += count;
    h.cumulative.emplace_back(moves, running / total);
  }
  return h;
}

double median_moves(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw InsufficientData("median of no episodes");
  std::vector<int> m;
  m.reserve(records.size());
  for (const auto& r : records) m.push_back(r.completed ? r.movesTaken : std::max(r.movesTaken, r.moveCap));
  std::sort(m.begin(), m.end());
  const std::size_t n = m.size();
  return n % 2 ? m[n / 2] : 0.5 * (m[n / 2 - 1] + m[n / 2]);
}

}  // namespace blastlab
