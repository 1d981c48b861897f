#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "blastlab/error.hpp"
#include "blastlab/levels.hpp"

namespace blastlab {

namespace {

int draw(Rng& rng, IntRange r) { return r.lo + uniform_index(rng, r.hi - r.lo + 1); }

double draw(Rng& rng, RealRange r) { return r.lo + (r.hi - r.lo) * uniform01(rng); }

std::string level_id(const std::string& prefix, int number) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", number);
  return prefix + buf;
}

bool has(const std::vector<Mechanic>& ms, Mechanic m) {
  return std::find(ms.begin(), ms.end(), m) != ms.end();
}

struct Draft {
  Level level;
  LevelMeta meta;
};

// One candidate level; validity and winnability are checked by the caller.
Draft draft_level(int width, int height, const TierKnobs& knobs, const std::vector<Mechanic>& mechanics,
                  std::optional<Mechanic> forced, Rng& rng) {
  Draft d;
  Level& L = d.level;
  L.width = width;
  L.height = height;
  const int n = width * height;
  L.colorCount = std::clamp(draw(rng, knobs.colorCount), 2, kMaxColors);
  L.refillWeights.assign(L.colorCount, 1.0 / L.colorCount);
  L.moveLimit = std::max(1, draw(rng, knobs.moveLimit));
  const int goal = std::max(1, draw(rng, knobs.goalCount));
  const double density = std::max(0.0, draw(rng, knobs.blockerDensity));

  L.layout.resize(n);
  for (auto& cell : L.layout) cell = Piece::make_color(uniform_index(rng, L.colorCount));
  std::vector<char> used(n, 0);

  bool place_blockers = density > 0.0;
  if (place_blockers && has(mechanics, Mechanic::Container) && width >= 2 && height >= 3 &&
      (forced == Mechanic::Container || uniform01(rng) < 0.5)) {
    // Keep the top row free so every column still receives refills.
    int x = uniform_index(rng, width - 1);
    int y = 1 + uniform_index(rng, height - 2);
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        int p = (y + dy) * width + x + dx;
        L.layout[p] = Piece::container(0);
        used[p] = 1;
      }
    }
    L.containerHp[0] = kDefaultContainerHp;
  }
  if (has(mechanics, Mechanic::Teleporter) && width >= 2 && height >= 3 &&
      (forced == Mechanic::Teleporter || uniform01(rng) < 0.5)) {
    // Entry on the bottom row of one column, exit on the top row of
    // another: the exit column is fed through the entry column.
    for (int tries = 0; tries < 50; ++tries) {
      int xa = uniform_index(rng, width);
      int xb = uniform_index(rng, width);
      int a = (height - 1) * width + xa;
      int b = xb;
      if (xa == xb || used[a] || used[b]) continue;
      L.layout[a] = Piece::teleporter(0, PortalRole::Entry);
      L.layout[b] = Piece::teleporter(0, PortalRole::Exit);
      used[a] = used[b] = 1;
      break;
    }
  }

  std::vector<Mechanic> simple;
  for (Mechanic m : {Mechanic::Rock, Mechanic::Grass, Mechanic::ToughRock}) {
    if (has(mechanics, m)) simple.push_back(m);
  }
  if (place_blockers && !simple.empty()) {
    int count = std::max(1, static_cast<int>(std::lround(density * n)));
    std::vector<int> free;
    for (int p = width; p < n; ++p) {
      if (!used[p]) free.push_back(p);
    }
    std::shuffle(free.begin(), free.end(), rng);
    count = std::min<int>(count, static_cast<int>(free.size()));
    for (int i = 0; i < count; ++i) {
      Mechanic m = simple[uniform_index(rng, static_cast<int>(simple.size()))];
      // The first blocker is the forced mechanic so it always appears.
      if (i == 0 && forced && has(simple, *forced)) m = *forced;
      int p = free[i];
      switch (m) {
        case Mechanic::Rock: L.layout[p] = Piece::rock(1); break;
        case Mechanic::ToughRock: L.layout[p] = Piece::rock(2 + uniform_index(rng, 2)); break;
        default: L.layout[p] = Piece::grass(); break;
      }
      used[p] = 1;
    }
  }

  int rocks = 0, grass = 0, containers = static_cast<int>(L.containerHp.size());
  bool tough = false, teleporter = false;
  for (const Piece& p : L.layout) {
    if (p.type == PieceType::Rock) {
      ++rocks;
      tough = tough || p.hp > 1;
    }
    if (p.type == PieceType::Grass) ++grass;
    if (p.type == PieceType::Teleporter) teleporter = true;
  }
  L.goals[GoalKind::collect(uniform_index(rng, L.colorCount))] = goal;
  if (rocks > 0) L.goals[GoalKind::rocks()] = (rocks + 1) / 2;
  if (grass > 0) L.goals[GoalKind::grass()] = (grass + 1) / 2;
  if (containers > 0) L.goals[GoalKind::containers()] = containers;

  d.meta.blockerDensity = place_blockers ? density : 0.0;
  d.meta.goalCount = goal;
  d.meta.colorCount = L.colorCount;
  d.meta.moveLimit = L.moveLimit;
  if (rocks > 0 && !tough) d.meta.mechanics.push_back(Mechanic::Rock);
  if (rocks > 0 && tough) {
    bool plain = std::any_of(L.layout.begin(), L.layout.end(),
                             [](const Piece& p) { return p.type == PieceType::Rock && p.hp == 1; });
    if (plain) d.meta.mechanics.push_back(Mechanic::Rock);
    d.meta.mechanics.push_back(Mechanic::ToughRock);
  }
  if (grass > 0) d.meta.mechanics.push_back(Mechanic::Grass);
  if (containers > 0) d.meta.mechanics.push_back(Mechanic::Container);
  if (teleporter) d.meta.mechanics.push_back(Mechanic::Teleporter);
  return d;
}

bool certify(const Level& L, uint64_t seed) {
  if (L.width * L.height <= 16) {
    return find_winning_sequence(L, seed, L.moveLimit).has_value();
  }
  return greedy_certifies(L, seed);
}

Draft generate_one(int width, int height, const TierKnobs& knobs, const std::vector<Mechanic>& mechanics,
                   std::optional<Mechanic> forced, uint64_t seed, int retryBudget, const std::string& id) {
  for (int attempt = 0; attempt < retryBudget; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(attempt)));
    Draft d = draft_level(width, height, knobs, mechanics, forced, rng);
    if (forced && !has(d.meta.mechanics, *forced)) continue;
    d.level.id = id;
    d.meta.levelId = id;
    try {
      validate_level(d.level);
    } catch (const ValidationError&) {
      continue;
    }
    if (!certify(d.level, derive_seed(seed, 0xce47ULL, static_cast<uint64_t>(attempt)))) continue;
    return d;
  }
  throw GenerationFailure("could not generate a valid level " + id + " within " +
                          std::to_string(retryBudget) + " attempts");
}

}  // namespace

std::string to_string(Mechanic m) {
  switch (m) {
    case Mechanic::Rock: return "rock";
    case Mechanic::Grass: return "grass";
    case Mechanic::ToughRock: return "tough-rock";
    case Mechanic::Container: return "container";
    case Mechanic::Teleporter: return "teleporter";
  }
  return "?";
}

Mechanic parse_mechanic(const std::string& s) {
  for (Mechanic m : {Mechanic::Rock, Mechanic::Grass, Mechanic::ToughRock, Mechanic::Container,
                     Mechanic::Teleporter}) {
    if (to_string(m) == s) return m;
  }
  throw DataError("unknown mechanic '" + s + "'");
}

CurriculumSpec CurriculumSpec::standard(int width, int height, uint64_t seed) {
  CurriculumSpec spec;
  spec.width = width;
  spec.height = height;
  spec.seed = seed;
  spec.tiers = {std::nullopt, Mechanic::Rock, Mechanic::Grass, Mechanic::ToughRock, std::nullopt,
                std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  const double cells = static_cast<double>(width * height);
  // Goal sizes scale with the board so small boards stay playable.
  const double scale = cells / static_cast<double>(kDefaultWidth * kDefaultHeight);
  for (int t = 0; t < 10; ++t) {
    double f = t / 9.0;
    TierKnobs k;
    k.blockerDensity = {0.03 + 0.07 * f, 0.06 + 0.10 * f};
    int glo = std::max(2, static_cast<int>(std::lround((12 + 18 * f) * scale)));
    int ghi = std::max(glo, static_cast<int>(std::lround((18 + 22 * f) * scale)));
    k.goalCount = {glo, ghi};
    int clo = 3 + t / 4;
    k.colorCount = {clo, std::min(kMaxColors, clo + 1)};
    int mlo = std::max(5, static_cast<int>(std::lround(22 * std::sqrt(scale))));
    k.moveLimit = {mlo, mlo + std::max(1, mlo / 4)};
    spec.knobs.push_back(k);
  }
  return spec;
}

CurriculumSpec CurriculumSpec::ladder(int count, int width, int height, int goalLo, int goalHi, int moveLimit,
                                      uint64_t seed) {
  CurriculumSpec spec;
  spec.width = width;
  spec.height = height;
  spec.seed = seed;
  spec.tierSize = 1;
  spec.perTierCount = 1;
  spec.idPrefix = "D";
  for (int i = 0; i < count; ++i) {
    double f = count > 1 ? static_cast<double>(i) / (count - 1) : 0.0;
    int goal = static_cast<int>(std::lround(goalLo + (goalHi - goalLo) * f));
    TierKnobs k;
    k.blockerDensity = {0.0, 0.0};
    k.goalCount = {goal, goal};
    k.colorCount = {4, 4};
    k.moveLimit = {moveLimit, moveLimit};
    spec.tiers.push_back(std::nullopt);
    spec.knobs.push_back(k);
  }
  return spec;
}

void CurriculumSpec::validate() const {
  auto fail = [](const std::string& why) { throw DataError("curriculum spec: " + why); };
  if (width < 1 || height < 1 || width > 64 || height > 64) fail("board dimensions must be in 1..64");
  if (tierSize < 1) fail("tier size must be >= 1");
  if (perTierCount < 0) fail("per-tier count must be >= 0");
  if (knobs.size() != tiers.size()) fail("one knob set per tier");
  if (retryBudget < 1) fail("retry budget must be >= 1");
  for (const TierKnobs& k : knobs) {
    if (k.blockerDensity.lo < 0 || k.blockerDensity.hi < k.blockerDensity.lo || k.blockerDensity.hi > 0.9) {
      fail("blocker density range must satisfy 0 <= lo <= hi <= 0.9");
    }
    if (k.goalCount.lo < 1 || k.goalCount.hi < k.goalCount.lo) fail("goal count range invalid");
    if (k.colorCount.lo < 2 || k.colorCount.hi < k.colorCount.lo || k.colorCount.hi > kMaxColors) {
      fail("color count range must lie in 2..6");
    }
    if (k.moveLimit.lo < 1 || k.moveLimit.hi < k.moveLimit.lo) fail("move limit range invalid");
  }
}

std::vector<Mechanic> CurriculumSpec::mechanics_up_to(int tier) const {
  std::vector<Mechanic> out;
  for (int t = 0; t <= tier && t < static_cast<int>(tiers.size()); ++t) {
    if (tiers[t] && !has(out, *tiers[t])) out.push_back(*tiers[t]);
  }
  return out;
}

std::vector<Level> generate_curriculum(const CurriculumSpec& spec, std::vector<LevelMeta>* meta) {
  spec.validate();
  std::vector<Level> levels;
  if (meta) meta->clear();
  for (int t = 0; t < static_cast<int>(spec.tiers.size()); ++t) {
    auto mechanics = spec.mechanics_up_to(t);
    for (int i = 0; i < spec.perTierCount; ++i) {
      // The first level of a tier showcases its new mechanic.
      std::optional<Mechanic> forced = i == 0 ? spec.tiers[t] : std::nullopt;
      // a tier configured without blockers cannot show a blocker mechanic
      if (forced && *forced != Mechanic::Teleporter && spec.knobs[t].blockerDensity.hi <= 0.0) forced.reset();
      std::string id = level_id(spec.idPrefix, t * spec.tierSize + i + 1);
      Draft d = generate_one(spec.width, spec.height, spec.knobs[t], mechanics, forced,
                             derive_seed(spec.seed, static_cast<uint64_t>(t), static_cast<uint64_t>(i)),
                             spec.retryBudget, id);
      d.meta.tier = t;
      levels.push_back(std::move(d.level));
      if (meta) meta->push_back(std::move(d.meta));
    }
  }
  return levels;
}

std::vector<Level> generate_eval_set(const CurriculumSpec& spec, int count, const std::vector<Mechanic>& newMechanics,
                                     std::vector<LevelMeta>* meta) {
  spec.validate();
  if (count < 0) throw DataError("eval set count must be >= 0");
  if (meta) meta->clear();
  std::vector<Level> levels;
  const int ntiers = static_cast<int>(spec.tiers.size());
  if (ntiers == 0 && count > 0) throw DataError("curriculum spec has no tiers");
  auto training = spec.mechanics_up_to(ntiers - 1);
  for (int i = 0; i < count; ++i) {
    uint64_t seed = derive_seed(spec.seed ^ 0x5eedf00dULL, static_cast<uint64_t>(i));
    Draft d;
    if (newMechanics.empty()) {
      // Back-level analog: the third level of each non-tutorial tier.
      int tier = ntiers > 1 ? 1 + i % (ntiers - 1) : 0;
      std::string id = level_id("B", tier * spec.tierSize + 3 + (i / std::max(1, ntiers - 1)) * 1000);
      d = generate_one(spec.width, spec.height, spec.knobs[tier], spec.mechanics_up_to(tier), std::nullopt, seed,
                       spec.retryBudget, id);
      d.meta.tier = tier;
    } else {
      auto mechanics = training;
      for (Mechanic m : newMechanics) {
        if (!has(mechanics, m)) mechanics.push_back(m);
      }
      Mechanic forced = newMechanics[static_cast<std::size_t>(i) % newMechanics.size()];
      std::string id = level_id("E", ntiers * spec.tierSize + i + 1);
      d = generate_one(spec.width, spec.height, spec.knobs[ntiers - 1], mechanics, forced, seed, spec.retryBudget, id);
      d.meta.tier = ntiers;
    }
    levels.push_back(std::move(d.level));
    if (meta) meta->push_back(std::move(d.meta));
  }
  return levels;
}

std::optional<std::vector<int>> find_winning_sequence(const Level& level, uint64_t seed, int maxDepth,
                                                      long nodeBudget) {
  long nodes = 0;
  std::vector<int> path;
  std::function<bool(const Game&, int)> dfs = [&](const Game& g, int depth) -> bool {
    if (g.won()) return true;
    if (depth >= maxDepth || g.finished() || ++nodes > nodeBudget) return false;
    std::vector<Cluster> clusters = find_clusters(g.board());
    std::stable_sort(clusters.begin(), clusters.end(),
                     [](const Cluster& a, const Cluster& b) { return a.size() > b.size(); });
    for (const Cluster& c : clusters) {
      if (static_cast<int>(c.size()) < kMinClusterSize) break;
      Game next = g;
      next.step(c.front());
      path.push_back(c.front());
      if (dfs(next, depth + 1)) return true;
      path.pop_back();
      if (nodes > nodeBudget) return false;
    }
    return false;
  };
  Game root(level, seed);
  if (dfs(root, 0)) return path;
  return std::nullopt;
}

bool greedy_certifies(const Level& level, uint64_t seed, int tries, int factor) {
  const int cap = factor * level.moveLimit;
  for (int i = 0; i < tries; ++i) {
    Game g(level, derive_seed(seed, static_cast<uint64_t>(i)));
    while (!g.finished() && g.moves() < cap) g.step(greedy_action(g.board()));
    if (g.won()) return true;
  }
  return false;
}

}  // namespace blastlab
