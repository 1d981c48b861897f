#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "blastlab/error.hpp"
#include "blastlab/synthplayers.hpp"
#include "helpers.hpp"

using namespace blastlab;
using namespace testutil;

namespace {

Level mixed_level(int moveLimit, const std::string& id = "M001") {
  return level_from_rows({"0120", "1201", "2012", "0120", "1201"}, 3, {{GoalKind::collect(0), 12}}, moveLimit, id);
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("no moves means no completions") {
  Level l = mixed_level(1);
  l.moveLimit = 0;
  PopulationSpec spec;
  spec.nPlayers = 20;
  auto t = simulate_population({l}, spec);
  CHECK(t.rows[0].completions == 0);
  CHECK(t.rows[0].rate == 0.0);
}

TEST_CASE("a one-tap level is always completed") {
  Level l = level_from_rows({"00", "00"}, 2, {{GoalKind::collect(0), 2}}, 1, "E001");
  PopulationSpec spec;
  spec.nPlayers = 30;
  auto t = simulate_population({l}, spec);
  CHECK(t.rows[0].rate == 1.0);
  CHECK(t.rows[0].attempts == 150);
}

TEST_CASE("rates are completions over attempts and reproducible") {
  std::vector<Level> levels{mixed_level(6, "A"), mixed_level(10, "B"), mixed_level(20, "C")};
  PopulationSpec spec;
  spec.nPlayers = 40;
  spec.attemptsPerPlayer = 3;
  spec.seed = 5;
  auto a = simulate_population(levels, spec, 1);
  auto b = simulate_population(levels, spec, 2);
  REQUIRE(a.rows.size() == 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.rows[i].levelId == levels[i].id);
    CHECK(a.rows[i].attempts == 120);
    CHECK(a.rows[i].rate == static_cast<double>(a.rows[i].completions) / a.rows[i].attempts);
    CHECK(a.rows[i].completions == b.rows[i].completions);
  }
  // a level's rate does not depend on which other levels are simulated
  auto solo = simulate_population({levels[1]}, spec);
  CHECK(solo.rows[0].completions == a.rows[1].completions);
}

TEST_CASE("more moves never hurt an attempt") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const uint64_t seed = rng();
    const double skill = uniform01(rng);
    bool prev = false;
    for (int limit = 1; limit <= 30; limit += 3) {
      bool won = simulate_attempt(mixed_level(limit), skill, seed);
      if (prev) CHECK(won);
      prev = won;
    }
  }
}

TEST_CASE("skilled players complete more often") {
  Level l = mixed_level(8);
  int greedy = 0, random = 0;
  for (uint64_t s = 0; s < 400; ++s) {
    greedy += simulate_attempt(l, 1.0, s);
    random += simulate_attempt(l, 0.0, s);
  }
  CHECK(greedy >= random);
  CHECK(greedy > 0);
}

TEST_CASE("skills follow the beta distribution") {
  PopulationSpec spec;
  spec.alpha = 2;
  spec.beta = 5;
  const int n = 4000;
  double sum = 0, sq = 0;
  for (int p = 0; p < n; ++p) {
    const double s = player_skill(spec, p);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    sum += s;
    sq += s * s;
  }
  const double mean = sum / n, var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(2.0 / 7).epsilon(0.03));
  CHECK(var == doctest::Approx(10.0 / (49 * 8)).epsilon(0.08));
  CHECK(player_skill(spec, 3) == player_skill(spec, 3));
}

TEST_CASE("population spec checks") {
  PopulationSpec spec;
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.warnings().empty());
  spec.nPlayers = 10;
  spec.attemptsPerPlayer = 2;
  CHECK(spec.warnings().size() == 1u);
  spec.alpha = 0;
  CHECK_THROWS_AS(spec.validate(), DataError);
  CHECK(level_id_hash("") == 0xcbf29ce484222325ULL);
  CHECK(level_id_hash("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("rates csv round-trip and validation") {
  auto dir = std::filesystem::temp_directory_path() / "blastlab_synth_csv";
  std::filesystem::create_directories(dir);
  CompletionRateTable t;
  t.rows = {{"A", 1, 3, 1.0 / 3}, {"B", 0, 5, 0.0}};
  write_rates_csv(t, dir / "rates.csv");
  auto back = read_rates_csv(dir / "rates.csv");
  REQUIRE(back.rows.size() == 2u);
  CHECK(back.rows[0].rate == t.rows[0].rate);
  CHECK(back.rates() == t.rates());
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "levelId,completions,attempts,rate\nA,1,3,0.5\n";
  }
  CHECK_THROWS_AS(read_rates_csv(dir / "bad.csv"), DataError);
  {
    std::ofstream bad(dir / "bad2.csv");
    bad << "levelId,completions,attempts\nA,1,3\n";
  }
  CHECK_THROWS_AS(read_rates_csv(dir / "bad2.csv"), DataError);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
