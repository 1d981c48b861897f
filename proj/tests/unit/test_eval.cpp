#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "blastlab/error.hpp"
#include "blastlab/eval.hpp"
#include "helpers.hpp"

using namespace blastlab;
using namespace testutil;

namespace {

std::vector<EpisodeRecord> records(const std::string& id, const std::vector<int>& done, int failed, int limit,
                                   int cap = 100) {
  std::vector<EpisodeRecord> out;
  for (int m : done) out.push_back({id, "a", 0, m, true, cap, limit});
  for (int i = 0; i < failed; ++i) out.push_back({id, "a", 0, cap, false, cap, limit});
  return out;
}

// Spearman without ties: 1 - 6 sum d^2 / (n (n^2 - 1)).
double spearman_no_ties(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double d2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double rx = 1, ry = 1;
    for (std::size_t j = 0; j < n; ++j) {
      rx += xs[j] < xs[i];
      ry += ys[j] < ys[i];
    }
    d2 += (rx - ry) * (rx - ry);
  }
  return 1.0 - 6.0 * d2 / (static_cast<double>(n) * (static_cast<double>(n) * n - 1));
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("blastlab_eval_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("best-fraction statistic examples") {
  auto r = records("L", {23, 5, 7, 9, 11, 13, 15, 17, 19, 21}, 3, 20);
  CHECK(best_fraction_stat(r, 0.2, 20).normalizedBestX == 0.35);
  CHECK(best_fraction_stat(r, 1.0, 20).normalizedBestX == 1.15);
  CHECK(best_fraction_stat(r, 0.01, 20).normalizedBestX == 0.25);
  CHECK(best_fraction_stat(r, 0.5, 20).normalizedBestX == doctest::Approx(13.0 / 20));
  CHECK(best_fraction_stat(r, 0.5, 20).completedFraction == doctest::Approx(10.0 / 13.0));
  CHECK_THROWS_AS(best_fraction_stat(records("L", {}, 4, 20), 0.5, 20), InsufficientData);
  CHECK_THROWS_AS(best_fraction_stat(r, 0.0, 20), DataError);
  CHECK_THROWS_AS(best_fraction_stat(r, 1.5, 20), DataError);
}

TEST_CASE("best-fraction statistic rises with x") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> done;
    const int n = 1 + uniform_index(rng, 40);
    for (int i = 0; i < n; ++i) done.push_back(1 + uniform_index(rng, 50));
    auto r = records("L", done, uniform_index(rng, 5), 25);
    double prev = 0;
    for (double x : kDefaultXGrid) {
      double s = best_fraction_stat(r, x, 25).normalizedBestX;
      CHECK(s >= prev);
      prev = s;
    }
    CHECK(prev == doctest::Approx(*std::max_element(done.begin(), done.end()) / 25.0));
  }
}

TEST_CASE("spearman examples") {
  std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(spearman(x, {10, 20, 30, 40, 50}) == doctest::Approx(1.0));
  CHECK(spearman(x, {5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman(x, {3, 1, 2, 5, 4}) == doctest::Approx(0.6));
  CHECK(spearman({1, 2, 3, 4}, {2, 1, 4, 3}) == doctest::Approx(0.6));
  CHECK(average_ranks({10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2}), DegenerateInput);
  CHECK_THROWS_AS(spearman({1, 2, 3}, {4, 4, 4}), DegenerateInput);
  CHECK_THROWS_AS(spearman({1, 2, 3}, {1, 2}), DataError);
}

TEST_CASE("spearman properties") {
  Rng rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + uniform_index(rng, 30);
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = uniform01(rng);
      ys[i] = uniform01(rng);
    }
    const double rho = spearman(xs, ys);
    CHECK(rho == doctest::Approx(spearman_no_ties(xs, ys)).epsilon(1e-9));
    CHECK(rho == doctest::Approx(spearman(ys, xs)).epsilon(1e-12));
    std::vector<double> tx(n);
    for (int i = 0; i < n; ++i) tx[i] = std::exp(3 * xs[i]) - 7;  // monotone transform
    CHECK(spearman(tx, ys) == doctest::Approx(rho).epsilon(1e-12));
    CHECK(rho >= -1.0);
    CHECK(rho <= 1.0);
  }
}

TEST_CASE("sweep finds a planted antitone relation") {
  std::map<std::string, std::vector<EpisodeRecord>> byLevel;
  std::map<std::string, double> rates;
  for (int i = 0; i < 10; ++i) {
    const std::string id = "L" + std::to_string(100 + i);
    // level i needs more moves and is completed less often
    byLevel[id] = records(id, {10 + i, 12 + 2 * i, 20 + 3 * i}, 1, 30);
    rates[id] = 0.9 - 0.05 * i;
  }
  auto rep = correlation_sweep(byLevel, rates);
  REQUIRE(rep.sweep.size() == kDefaultXGrid.size());
  for (const auto& p : rep.sweep) {
    REQUIRE(p.rho);
    CHECK(*p.rho == doctest::Approx(-1.0));
    CHECK(p.levelsUsed == 10);
  }
  CHECK(rep.best_index() == std::optional<std::size_t>(0));
}

TEST_CASE("sweep on unrelated levels stays near zero") {
  Rng rng(31);
  std::map<std::string, std::vector<EpisodeRecord>> byLevel;
  std::map<std::string, double> rates;
  for (int i = 0; i < 50; ++i) {
    const std::string id = "L" + std::to_string(100 + i);
    std::vector<int> done;
    for (int k = 0; k < 20; ++k) done.push_back(5 + uniform_index(rng, 40));
    byLevel[id] = records(id, done, 0, 30);
    rates[id] = uniform01(rng);
  }
  auto rep = correlation_sweep(byLevel, rates);
  for (const auto& p : rep.sweep) {
    REQUIRE(p.rho);
    CHECK(std::abs(*p.rho) < 0.35);
  }
}

TEST_CASE("sweep reports missing data") {
  std::map<std::string, std::vector<EpisodeRecord>> byLevel;
  byLevel["A"] = records("A", {3}, 0, 10);
  byLevel["B"] = records("B", {4}, 0, 10);
  byLevel["C"] = records("C", {}, 5, 10);
  std::map<std::string, double> rates{{"A", 0.5}, {"B", 0.4}, {"C", 0.1}, {"D", 0.2}};
  auto rep = correlation_sweep(byLevel, rates);
  for (const auto& p : rep.sweep) {
    CHECK_FALSE(p.rho);
    CHECK(p.levelsUsed == 2);
    CHECK(p.note == "fewer than 3 usable levels");
  }
  CHECK_FALSE(rep.best_index());
  REQUIRE(rep.levels.size() == 4u);
  CHECK(rep.levels[2].note == "no completed runs");
  CHECK(rep.levels[3].note == "no episodes");

  auto dir = scratch("report");
  write_correlation_report(rep, dir, "config.ini");
  CHECK(std::filesystem::exists(dir / "sweep.csv"));
  CHECK(std::filesystem::exists(dir / "levels.csv"));
  CHECK(std::filesystem::exists(dir / "summary.txt"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("move distribution and median") {
  auto r = records("L", {3, 5, 5, 8}, 2, 10, 40);
  auto h = move_distribution(r, 1);
  CHECK(h.completed == 4);
  CHECK(h.censored == 2);
  CHECK(h.bins == std::map<int, int>{{3, 1}, {5, 2}, {8, 1}});
  REQUIRE(h.cumulative.size() == 3u);
  CHECK(h.cumulative[0].second == doctest::Approx(1.0 / 6));
  CHECK(h.cumulative[1].second == doctest::Approx(3.0 / 6));
  CHECK(h.cumulative[2].second == doctest::Approx(4.0 / 6));
  CHECK(move_distribution(r, 5).bins == std::map<int, int>{{0, 1}, {5, 3}});
  // 3 5 5 8 40 40
  CHECK(median_moves(r) == doctest::Approx(6.5));
  CHECK(median_moves(records("L", {1, 2, 9}, 0, 10)) == 2.0);
  CHECK_THROWS_AS(median_moves({}), InsufficientData);
  CHECK_THROWS_AS(move_distribution(r, 0), DataError);
}

TEST_CASE("running episodes") {
  Level l = level_from_rows({"0011", "0101", "1010", "0011"}, 2, {{GoalKind::collect(0), 6}}, 6);
  RandomAgent agent;
  auto none = run_episodes(agent, l, 5, 0, 1);
  for (const auto& r : none) {
    CHECK(r.movesTaken == 0);
    CHECK_FALSE(r.completed);
  }
  auto a = run_episodes(agent, l, 40, 30, 77);
  auto b = run_episodes(agent, l, 40, 30, 77, 3);
  CHECK(a == b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == derive_seed(77, i));
    CHECK(a[i].movesTaken <= 30);
    CHECK(a[i].moveLimit == 6);
    CHECK(a[i].agentId == "random");
  }
  CHECK(std::any_of(a.begin(), a.end(), [](const EpisodeRecord& r) { return r.completed; }));
  CHECK_THROWS_AS(run_episodes(agent, l, 0, 10, 1), DataError);
}

TEST_CASE("episode csv round-trip") {
  auto dir = scratch("episodes");
  std::vector<EpisodeRecord> r = {{"L1", "random", 18446744073709551615ULL, 4, true, 50, 10},
                                  {"L1", "greedy", 3, 50, false, 50, 10}};
  write_episodes_csv(r, dir / "e.csv", "config.ini");
  CHECK(read_episodes_csv(dir / "e.csv") == r);
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "levelId,agentId,seed,movesTaken,completed,moveCap,moveLimit\nL1,a,1,60,1,50,10\n";
  }
  CHECK_THROWS_AS(read_episodes_csv(dir / "bad.csv"), DataError);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
