#include "blastlab/synthplayers.hpp"

#include <cmath>
#include <random>

#include "blastlab/error.hpp"
#include "blastlab/parallel.hpp"
#include "blastlab/util/csv.hpp"

namespace blastlab {

void PopulationSpec::validate() const {
  if (nPlayers < 1 || attemptsPerPlayer < 1) throw DataError("population needs at least one player and attempt");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw DataError("skill Beta parameters must be positive");
}

std::vector<std::string> PopulationSpec::warnings() const {
  std::vector<std::string> w;
  if (static_cast<long>(nPlayers) * attemptsPerPlayer < 100) {
    w.push_back("fewer than 100 attempts per level; completion rates will be noisy");
  }
  return w;
}

std::map<std::string, double> CompletionRateTable::rates() const {
  std::map<std::string, double> out;
  for (const auto& r : rows) out[r.levelId] = r.rate;
  return out;
}

uint64_t level_id_hash(const std::string& id) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double player_skill(const PopulationSpec& spec, int player) {
  Rng rng(derive_seed(spec.seed, 0x5c111ULL, static_cast<uint64_t>(player)));
  double a = std::gamma_distribution<double>(spec.alpha, 1.0)(rng);
  double b = std::gamma_distribution<double>(spec.beta, 1.0)(rng);
  if (a + b == 0.0) return 0.5;
  return a / (a + b);
}

bool simulate_attempt(const Level& level, double skill, uint64_t seed) {
  if (level.moveLimit <= 0) return false;
  Game game(level, seed);
  Rng rng(mix64(seed ^ 0x91a7e5ULL));
  std::vector<int> valid;
  while (!game.finished() && game.moves() < level.moveLimit) {
    int action;
    if (uniform01(rng) < skill) {
      action = greedy_action(game.board());
    } else {
      valid.clear();
      const auto& mask = game.mask();
      for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) valid.push_back(static_cast<int>(i));
      }
      action = valid[uniform_index(rng, static_cast<int>(valid.size()))];
    }
    game.step(action);
  }
  return game.won();
}

CompletionRateTable simulate_population(const std::vector<Level>& levels, const PopulationSpec& spec, int jobs) {
  spec.validate();
  std::vector<double> skill(spec.nPlayers);
  for (int p = 0; p < spec.nPlayers; ++p) skill[p] = player_skill(spec, p);
  const std::size_t P = spec.nPlayers;
  std::vector<int> wins(levels.size() * P, 0);
  parallel_for(levels.size() * P, jobs, [&](std::size_t k) {
    const Level& level = levels[k / P];
    const int p = static_cast<int>(k % P);
    const uint64_t lvl = derive_seed(spec.seed, level_id_hash(level.id));
    int w = 0;
    for (int a = 0; a < spec.attemptsPerPlayer; ++a) {
      w += simulate_attempt(level, skill[p], derive_seed(lvl, static_cast<uint64_t>(p), static_cast<uint64_t>(a)));
    }
    wins[k] = w;
  });
  CompletionRateTable t;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    RateRow r;
    r.levelId = levels[l].id;
    for (std::size_t p = 0; p < P; ++p) r.completions += wins[l * P + p];
    r.attempts = static_cast<long>(P) * spec.attemptsPerPlayer;
    r.rate = static_cast<double>(r.completions) / static_cast<double>(r.attempts);
    t.rows.push_back(std::move(r));
  }
  return t;
}

void write_rates_csv(const CompletionRateTable& t, const std::filesystem::path& path, const std::string& configNote) {
  csv::Writer w(path, {"levelId", "completions", "attempts", "rate"}, configNote);
  for (const auto& r : t.rows) {
    w.row({r.levelId, std::to_string(r.completions), std::to_string(r.attempts), csv::fmt(r.rate, 17)});
  }
  w.close();
}

CompletionRateTable read_rates_csv(const std::filesystem::path& path) {
  auto tab = csv::read(path);
  const int cid = tab.column("levelId"), cc = tab.column("completions"), ca = tab.column("attempts"),
            cr = tab.column("rate");
  CompletionRateTable t;
  for (const auto& row : tab.rows) {
    RateRow r;
    r.levelId = row[cid];
    r.completions = csv::to_long(row[cc], "completions");
    r.attempts = csv::to_long(row[ca], "attempts");
    r.rate = csv::to_double(row[cr], "rate");
    if (r.attempts <= 0 || r.completions < 0 || r.completions > r.attempts || !(r.rate >= 0.0 && r.rate <= 1.0)) {
      throw DataError(path.string() + ": invalid rate row for level " + r.levelId);
    }
    if (std::abs(r.rate - static_cast<double>(r.completions) / r.attempts) > 1e-9) {
      throw DataError(path.string() + ": rate is not completions/attempts for level " + r.levelId);
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

}  // namespace blastlab
