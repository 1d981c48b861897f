#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include "blastlab/agents.hpp"
#include "blastlab/cli.hpp"
#include "blastlab/error.hpp"
#include "blastlab/eval.hpp"
#include "blastlab/levels.hpp"
#include "blastlab/ppo.hpp"
#include "blastlab/synthplayers.hpp"
#include "blastlab/util/csv.hpp"

namespace fs = std::filesystem;

namespace blastlab::cli {

namespace {

constexpr const char* kConfigName = "config.ini";

// Outputs are written to "<dir>.partial" and moved into place only when the
// command succeeds, so a failed run leaves nothing half-written behind.
class StagedDir {
 public:
  explicit StagedDir(fs::path final) : final_(std::move(final)), tmp_(final_.string() + ".partial") {
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
  }
  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(tmp_, ec);
    }
  }
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;

  const fs::path& dir() const { return tmp_; }
  fs::path operator/(const std::string& name) const { return tmp_ / name; }
  void commit() {
    fs::remove_all(final_);
    fs::rename(tmp_, final_);
    committed_ = true;
  }

 private:
  fs::path final_;
  fs::path tmp_;
  bool committed_ = false;
};

struct Globals {
  std::string out = "runs";
  uint64_t seed = 1;
  int jobs = 1;
};

void write_snapshot(const CLI::App& app, const StagedDir& staged) {
  std::ofstream out(staged / kConfigName, std::ios::binary);
  out << "# resolved configuration; rerun with --config " << kConfigName << "\n";
  out << app.config_to_str(true, false);
  if (!out) throw DataError("cannot write config snapshot");
}

std::vector<Level> load_levels(const std::string& path) {
  if (fs::is_regular_file(path)) return {load_level(path)};
  if (!fs::is_directory(path)) throw DataError("no level file or directory at " + path);
  auto levels = load_level_set(path);
  if (levels.empty()) throw DataError("no .lvl files in " + path);
  return levels;
}

// ---- gen-levels

struct GenArgs {
  std::string set = "curriculum";
  std::string kind = "curriculum";
  int width = kDefaultWidth;
  int height = kDefaultHeight;
  int tiers = 10;
  int perTier = 10;
  int count = 20;
  std::vector<std::string> newMechanics = {"teleporter", "container"};
  int goalLo = 6;
  int goalHi = 30;
  int moveLimit = 15;
};

void cmd_gen_levels(const CLI::App& app, const Globals& g, const GenArgs& a) {
  StagedDir staged(fs::path(g.out) / "levels" / a.set);
  write_snapshot(app, staged);
  std::vector<LevelMeta> meta;
  std::vector<Level> levels;
  CurriculumSpec spec = CurriculumSpec::standard(a.width, a.height, g.seed);
  if (a.tiers < 1 || a.tiers > static_cast<int>(spec.tiers.size())) throw DataError("--tiers must be in 1..10");
  spec.tiers.resize(a.tiers);
  spec.knobs.resize(a.tiers);
  spec.perTierCount = a.perTier;
  if (a.kind == "curriculum") {
    levels = generate_curriculum(spec, &meta);
  } else if (a.kind == "eval") {
    std::vector<Mechanic> ms;
    for (const auto& m : a.newMechanics) ms.push_back(parse_mechanic(m));
    if (ms.empty()) throw DataError("eval sets need at least one new mechanic (use --kind backlevels)");
    levels = generate_eval_set(spec, a.count, ms, &meta);
  } else if (a.kind == "backlevels") {
    levels = generate_eval_set(spec, a.count, {}, &meta);
  } else if (a.kind == "ladder") {
    auto ladder = CurriculumSpec::ladder(a.count, a.width, a.height, a.goalLo, a.goalHi, a.moveLimit, g.seed);
    levels = generate_curriculum(ladder, &meta);
  } else {
    throw DataError("unknown level kind '" + a.kind + "'");
  }
  save_level_set(levels, staged.dir());
  csv::Writer w(staged / "meta.csv",
                {"levelId", "tier", "blockerDensity", "goalCount", "colorCount", "moveLimit", "mechanics"},
                kConfigName);
  for (const auto& m : meta) {
    std::string mech;
    for (Mechanic x : m.mechanics) mech += (mech.empty() ? "" : ";") + to_string(x);
    w.row({m.levelId, std::to_string(m.tier), csv::fmt(m.blockerDensity), std::to_string(m.goalCount),
           std::to_string(m.colorCount), std::to_string(m.moveLimit), mech});
  }
  w.close();
  staged.commit();
  std::cout << "wrote " << levels.size() << " levels to " << (fs::path(g.out) / "levels" / a.set).string() << "\n";
}

// ---- train

struct TrainArgs {
  std::string run;
  std::string scenario = "one-step-curriculum";
  std::string curriculum;
  std::string target;
  long steps = 100000;
  long targetSteps = 50000;
  int colors = 0;
  std::string init;
  bool quiet = false;
};

void cmd_train(const CLI::App& app, const Globals& g, const TrainArgs& a, PPOConfig cfg) {
  cfg.seed = g.seed;
  cfg.validate();
  ScenarioSpec spec;
  spec.kind = parse_scenario_kind(a.scenario);
  spec.colors = a.colors;
  if (spec.kind != ScenarioKind::OneStepTarget) {
    if (a.curriculum.empty()) throw DataError("--curriculum is required for " + a.scenario);
    spec.curriculumLevels = load_levels(a.curriculum);
  }
  if (spec.kind != ScenarioKind::OneStepCurriculum) {
    if (a.target.empty()) throw DataError("--target is required for " + a.scenario);
    spec.targetLevel = load_level(a.target);
  }
  if (spec.kind == ScenarioKind::TwoStep) {
    spec.stepBudgets = {a.steps, a.targetSteps};
  } else {
    spec.stepBudgets = {a.steps};
  }
  const std::string run = a.run.empty() ? to_string(spec.kind) : a.run;
  const fs::path final_dir = fs::path(g.out) / "train" / run;
  StagedDir staged(final_dir);
  write_snapshot(app, staged);

  ScenarioOptions opts;
  opts.metadata["config"] = kConfigName;
  opts.dumpDir = fs::path(g.out) / "dumps" / run;
  if (!a.init.empty()) opts.init = nn::load_checkpoint(a.init).params;
  if (!a.quiet) {
    opts.onUpdate = [](const CurveRow& r) {
      if (r.updateIdx % 10 != 0) return;
      std::cerr << r.phase << " update " << r.updateIdx << " steps " << r.envSteps << " moves "
                << csv::fmt(r.meanEpisodeMoves, 4) << " win " << csv::fmt(r.winRate, 3) << "\n";
    };
  }
  auto result = run_scenario(spec, cfg, opts);
  for (const auto& ck : result.checkpoints) nn::save_checkpoint(ck.checkpoint, staged / (ck.name + ".ckpt"));
  nn::save_checkpoint(result.final(), staged / "final.ckpt");
  write_curve_csv(result.curve, staged / "curve.csv", kConfigName);
  staged.commit();
  std::cout << "trained " << run << ": " << (final_dir / "final.ckpt").string() << "\n";
}

// ---- eval

struct EvalArgs {
  std::string run = "eval";
  std::vector<std::string> agents = {"random"};
  std::string levels;
  int episodes = 1000;
  int moveCap = 0;
  int moveCapFactor = 10;
};

int move_cap_for(const Level& l, int moveCap, int factor) { return moveCap > 0 ? moveCap : factor * l.moveLimit; }

void cmd_eval(const CLI::App& app, const Globals& g, const EvalArgs& a) {
  if (a.episodes < 1) throw DataError("--episodes must be at least 1");
  auto levels = load_levels(a.levels);
  std::vector<std::unique_ptr<Agent>> agents;
  for (const auto& s : a.agents) agents.push_back(make_agent(s));
  StagedDir staged(fs::path(g.out) / "eval" / a.run);
  write_snapshot(app, staged);
  std::vector<EpisodeRecord> all;
  csv::Writer med(staged / "medians.csv", {"agentId", "levelId", "episodes", "completed", "medianMoves"}, kConfigName);
  for (const auto& agent : agents) {
    for (const auto& level : levels) {
      // every agent sees the same deals on a level
      const uint64_t base = derive_seed(g.seed, level_id_hash(level.id));
      auto recs = run_episodes(*agent, level, a.episodes, move_cap_for(level, a.moveCap, a.moveCapFactor), base, g.jobs);
      int completed = 0;
      for (const auto& r : recs) completed += r.completed;
      med.row({agent->id(), level.id, std::to_string(recs.size()), std::to_string(completed),
               csv::fmt(median_moves(recs))});
      all.insert(all.end(), recs.begin(), recs.end());
    }
  }
  med.close();
  write_episodes_csv(all, staged / "episodes.csv", kConfigName);
  staged.commit();
  std::cout << "wrote " << all.size() << " episodes\n";
}

// ---- simulate-players

struct PlayersArgs {
  std::string run = "players";
  std::string levels;
  PopulationSpec pop;
};

void cmd_simulate_players(const CLI::App& app, const Globals& g, PlayersArgs a) {
  a.pop.seed = g.seed;
  a.pop.validate();
  for (const auto& w : a.pop.warnings()) std::cerr << "warning: " << w << "\n";
  auto levels = load_levels(a.levels);
  StagedDir staged(fs::path(g.out) / "players" / a.run);
  write_snapshot(app, staged);
  auto table = simulate_population(levels, a.pop, g.jobs);
  write_rates_csv(table, staged / "rates.csv", kConfigName);
  staged.commit();
  std::cout << "wrote synthetic completion rates for " << table.rows.size() << " levels\n";
}

// ---- correlate / report

std::map<std::string, std::vector<EpisodeRecord>> group_by_level(const std::vector<EpisodeRecord>& recs) {
  std::map<std::string, std::vector<EpisodeRecord>> out;
  for (const auto& r : recs) out[r.levelId].push_back(r);
  return out;
}

CorrelationReport correlate_agent(const std::vector<EpisodeRecord>& recs, const std::string& agent,
                                  const CompletionRateTable& rates, const std::vector<double>& grid) {
  for (double x : grid) {
    if (!(x > 0.0 && x <= 1.0)) throw DataError("x grid values must lie in (0, 1]");
  }
  std::vector<EpisodeRecord> mine;
  for (const auto& r : recs) {
    if (r.agentId == agent) mine.push_back(r);
  }
  auto rep = correlation_sweep(group_by_level(mine), rates.rates(), grid);
  rep.metadata["agent"] = agent;
  rep.metadata["episodes"] = std::to_string(mine.size());
  return rep;
}

std::set<std::string> agent_ids(const std::vector<EpisodeRecord>& recs) {
  std::set<std::string> ids;
  for (const auto& r : recs) ids.insert(r.agentId);
  return ids;
}

struct CorrelateArgs {
  std::string run = "correlate";
  std::vector<std::string> episodes;
  std::string rates;
  std::string agent;
  std::vector<double> grid = kDefaultXGrid;
};

void cmd_correlate(const CLI::App& app, const Globals& g, const CorrelateArgs& a) {
  std::vector<EpisodeRecord> recs;
  for (const auto& p : a.episodes) {
    auto part = read_episodes_csv(p);
    recs.insert(recs.end(), part.begin(), part.end());
  }
  auto rates = read_rates_csv(a.rates);
  auto ids = agent_ids(recs);
  if (ids.empty()) throw InsufficientData("no episodes to correlate");
  std::string agent = a.agent;
  if (agent.empty()) {
    if (ids.size() > 1) throw DataError("episodes mix several agents; pick one with --agent");
    agent = *ids.begin();
  }
  auto rep = correlate_agent(recs, agent, rates, a.grid);
  if (!rep.best_index()) {
    std::string why = rep.sweep.empty() ? "empty x grid" : rep.sweep.front().note;
    throw DegenerateInput("correlation undefined at every x: " + why);
  }
  StagedDir staged(fs::path(g.out) / "correlate" / a.run);
  write_snapshot(app, staged);
  write_correlation_report(rep, staged.dir(), kConfigName);
  staged.commit();
  const auto& best = rep.sweep[*rep.best_index()];
  std::cout << "max |rho| " << csv::fmt(std::abs(*best.rho), 4) << " at x=" << csv::fmt(best.x) << "\n";
}

struct ReportArgs {
  std::string runDir;
  int binWidth = 1;
  std::vector<double> grid = kDefaultXGrid;
};

void cmd_report(const CLI::App& app, const ReportArgs& a) {
  const fs::path root(a.runDir);
  if (!fs::is_directory(root)) throw DataError("run directory " + a.runDir + " does not exist");
  std::vector<fs::path> episodeFiles, rateFiles;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).string();
    if (rel.rfind("report", 0) == 0 || rel.find(".partial") != std::string::npos) continue;
    if (e.path().filename() == "episodes.csv") episodeFiles.push_back(e.path());
    if (e.path().filename() == "rates.csv") rateFiles.push_back(e.path());
  }
  std::sort(episodeFiles.begin(), episodeFiles.end());
  std::sort(rateFiles.begin(), rateFiles.end());
  if (episodeFiles.empty()) throw InsufficientData("no episodes.csv under " + a.runDir);
  std::vector<EpisodeRecord> recs;
  for (const auto& p : episodeFiles) {
    auto part = read_episodes_csv(p);
    recs.insert(recs.end(), part.begin(), part.end());
  }

  StagedDir staged(root / "report");
  write_snapshot(app, staged);
  std::map<std::pair<std::string, std::string>, std::vector<EpisodeRecord>> groups;
  for (const auto& r : recs) groups[{r.agentId, r.levelId}].push_back(r);
  std::vector<NamedHistogram> hists;
  csv::Writer med(staged / "medians.csv",
                  {"agentId", "levelId", "episodes", "completed", "medianMoves", "medianOverMoveLimit"}, kConfigName);
  for (const auto& [key, rs] : groups) {
    hists.push_back({key.second, key.first, move_distribution(rs, a.binWidth)});
    const double m = median_moves(rs);
    med.row({key.first, key.second, std::to_string(rs.size()), std::to_string(hists.back().hist.completed),
             csv::fmt(m), csv::fmt(m / rs.front().moveLimit)});
  }
  med.close();
  write_move_distributions(hists, staged / "move_histogram.csv", staged / "move_cumulative.csv", kConfigName);

  std::ofstream summary(staged / "summary.txt", std::ios::binary);
  summary << "config: " << kConfigName << "\n";
  summary << "episode files: " << episodeFiles.size() << ", episodes: " << recs.size() << "\n";
  if (!rateFiles.empty()) {
    auto rates = read_rates_csv(rateFiles.front());
    summary << "completion rates: " << fs::relative(rateFiles.front(), root).string() << " (synthetic unless external)\n";
    for (const auto& agent : agent_ids(recs)) {
      auto rep = correlate_agent(recs, agent, rates, a.grid);
      write_correlation_report(rep, staged / ("correlation-" + agent), kConfigName);
      if (auto b = rep.best_index()) {
        summary << agent << ": max |rho| " << csv::fmt(std::abs(*rep.sweep[*b].rho), 4) << " (rho "
                << csv::fmt(*rep.sweep[*b].rho, 4) << ") at x=" << csv::fmt(rep.sweep[*b].x) << "\n";
      } else {
        summary << agent << ": correlation undefined\n";
      }
    }
  } else {
    summary << "no rates.csv found; correlation skipped\n";
  }
  summary.close();
  staged.commit();
  std::cout << "report written to " << (root / "report").string() << "\n";
}

// ---- bench

struct BenchArgs {
  int width = kDefaultWidth;
  int height = kDefaultHeight;
  int colors = 4;
  long moves = 200000;
};

void cmd_bench(const Globals& g, const BenchArgs& a) {
  auto r = bench_engine(a.width, a.height, a.colors, a.moves, g.seed);
  std::printf("board %dx%d colors %d: %ld moves in %.3f s = %.0f moves/s\n", a.width, a.height, a.colors, r.moves,
              r.seconds, r.movesPerSecond);
}

void add_ppo_options(CLI::App* sub, PPOConfig& c) {
  sub->add_option("--n-envs", c.nEnvs, "parallel environments")->capture_default_str();
  sub->add_option("--n-steps", c.nSteps, "steps per env per update")->capture_default_str();
  sub->add_option("--n-minibatches", c.nMinibatches, "minibatches per epoch")->capture_default_str();
  sub->add_option("--lr", c.learningRate, "Adam learning rate")->capture_default_str();
  sub->add_option("--ent-coef", c.entropyCoef, "entropy bonus coefficient")->capture_default_str();
  sub->add_option("--clip-range", c.clipRange, "surrogate clip range")->capture_default_str();
  sub->add_option("--vf-coef", c.valueCoef, "value loss coefficient")->capture_default_str();
  sub->add_option("--gamma", c.gamma, "discount")->capture_default_str();
  sub->add_option("--gae-lambda", c.lambdaGae, "GAE lambda")->capture_default_str();
  sub->add_option("--epochs", c.updateEpochs, "epochs per update")->capture_default_str();
  sub->add_option("--step-cap", c.episodeStepCap, "training episode step cap")->capture_default_str();
  sub->add_option("--max-grad-norm", c.maxGradNorm, "global gradient norm clip (<= 0 disables)")
      ->capture_default_str();
}

int report_fault(const std::string& out, const std::string& command, const std::exception& e, const char* kind) {
  std::cerr << "internal fault in '" << command << "' (" << kind << "): " << e.what() << "\n";
  std::error_code ec;
  fs::create_directories(out, ec);
  std::ofstream dump(fs::path(out) / ("fault-" + command + ".txt"));
  if (dump) {
    dump << "command: " << command << "\nkind: " << kind << "\nmessage: " << e.what() << "\n";
    std::cerr << "diagnostics written to " << (fs::path(out) / ("fault-" + command + ".txt")).string() << "\n";
  }
  return kExitInternal;
}

}  // namespace

BenchResult bench_engine(int width, int height, int colors, long moves, uint64_t seed) {
  if (width < 1 || height < 1 || colors < 2 || colors > kMaxColors || moves < 1) {
    throw DataError("bench needs a positive board, 2..6 colors and a positive move count");
  }
  Level level;
  level.id = "bench";
  level.width = width;
  level.height = height;
  level.layout.assign(width * height, Piece::empty());
  level.colorCount = colors;
  level.refillWeights.assign(colors, 1.0 / colors);
  level.moveLimit = 1;
  level.goals[GoalKind::collect(0)] = 1 << 30;
  Rng rng(seed);
  Board board = make_board(level, seed);
  MoveOutcome outcome;
  std::vector<int> valid;
  long deals = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (long i = 0; i < moves; ++i) {
    auto mask = valid_actions(board);
    valid.clear();
    for (int p = 0; p < board.size(); ++p) {
      if (mask[p]) valid.push_back(p);
    }
    if (valid.empty()) {
      try {
        shuffle_dead_board_inplace(board);
      } catch (const Unresolvable&) {
        board = make_board(level, derive_seed(seed, ++deals));
      }
      --i;
      continue;
    }
    apply_move_inplace(board, valid[uniform_index(rng, static_cast<int>(valid.size()))], outcome);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {moves, secs, secs > 0 ? moves / secs : 0.0};
}

int run(int argc, const char* const* argv) {
  CLI::App app{"blastlab: train and evaluate puzzle-playing agents, estimate level difficulty"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "INI/TOML config file; command-line flags override it");
  Globals g;
  if (const char* env = std::getenv("BLASTLAB_OUT"); env && *env) g.out = env;
  app.add_option("--out", g.out, "output root (default $BLASTLAB_OUT or ./runs)")->capture_default_str();
  app.add_option("--seed", g.seed, "global seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "worker threads (<= 0: all cores)")->capture_default_str();

  GenArgs gen;
  auto* sGen = app.add_subcommand("gen-levels", "generate a level set");
  sGen->add_option("--set", gen.set, "level set name")->capture_default_str();
  sGen->add_option("--kind", gen.kind, "curriculum | eval | backlevels | ladder")->capture_default_str();
  sGen->add_option("--width", gen.width)->capture_default_str();
  sGen->add_option("--height", gen.height)->capture_default_str();
  sGen->add_option("--tiers", gen.tiers, "curriculum tiers (1..10)")->capture_default_str();
  sGen->add_option("--per-tier", gen.perTier, "levels per tier")->capture_default_str();
  sGen->add_option("--count", gen.count, "levels for eval/backlevels/ladder sets")->capture_default_str();
  sGen->add_option("--new-mechanics", gen.newMechanics, "mechanics new to an eval set")->capture_default_str();
  sGen->add_option("--goal-lo", gen.goalLo, "ladder: easiest goal count")->capture_default_str();
  sGen->add_option("--goal-hi", gen.goalHi, "ladder: hardest goal count")->capture_default_str();
  sGen->add_option("--move-limit", gen.moveLimit, "ladder: move limit")->capture_default_str();

  TrainArgs tr;
  PPOConfig ppo;
  auto* sTrain = app.add_subcommand("train", "train a PPO agent with one of the training scenarios");
  sTrain->add_option("--run", tr.run, "run name (default: scenario name)");
  sTrain->add_option("--scenario", tr.scenario, "one-step-curriculum | one-step-target | two-step")
      ->capture_default_str();
  sTrain->add_option("--curriculum", tr.curriculum, "curriculum level directory");
  sTrain->add_option("--target", tr.target, "target level file");
  sTrain->add_option("--steps", tr.steps, "env steps of the first phase")->capture_default_str();
  sTrain->add_option("--target-steps", tr.targetSteps, "env steps of the two-step target phase")
      ->capture_default_str();
  sTrain->add_option("--colors", tr.colors, "color channels of the network (0: most used)")->capture_default_str();
  sTrain->add_option("--init", tr.init, "start from this checkpoint's weights");
  sTrain->add_flag("--quiet", tr.quiet, "no progress output");
  add_ppo_options(sTrain, ppo);

  EvalArgs ev;
  auto* sEval = app.add_subcommand("eval", "run evaluation episodes");
  sEval->add_option("--run", ev.run, "run name")->capture_default_str();
  sEval->add_option("--agent", ev.agents, "random | greedy | policy:<ckpt>[:argmax] (repeatable)")
      ->capture_default_str();
  sEval->add_option("--levels", ev.levels, "level file or directory")->required();
  sEval->add_option("--episodes", ev.episodes, "episodes per level and agent")->capture_default_str();
  sEval->add_option("--move-cap", ev.moveCap, "fixed move cap (0: factor x move limit)")->capture_default_str();
  sEval->add_option("--move-cap-factor", ev.moveCapFactor, "cap as a multiple of the move limit")
      ->capture_default_str();

  PlayersArgs pl;
  auto* sPlayers = app.add_subcommand("simulate-players", "estimate completion rates with synthetic players");
  sPlayers->add_option("--run", pl.run, "run name")->capture_default_str();
  sPlayers->add_option("--levels", pl.levels, "level file or directory")->required();
  sPlayers->add_option("--players", pl.pop.nPlayers)->capture_default_str();
  sPlayers->add_option("--attempts", pl.pop.attemptsPerPlayer, "attempts per player and level")
      ->capture_default_str();
  sPlayers->add_option("--alpha", pl.pop.alpha, "skill Beta alpha")->capture_default_str();
  sPlayers->add_option("--beta", pl.pop.beta, "skill Beta beta")->capture_default_str();

  CorrelateArgs co;
  auto* sCorr = app.add_subcommand("correlate", "best-x% statistic vs completion rate, Spearman sweep");
  sCorr->add_option("--run", co.run, "run name")->capture_default_str();
  sCorr->add_option("--episodes", co.episodes, "episode CSV(s)")->required();
  sCorr->add_option("--rates", co.rates, "completion-rate CSV")->required();
  sCorr->add_option("--agent", co.agent, "agent id to use when episodes mix agents");
  sCorr->add_option("--x-grid", co.grid, "fractions of best runs")->capture_default_str();

  ReportArgs rp;
  auto* sReport = app.add_subcommand("report", "move distributions, medians and correlations for a run directory");
  sReport->add_option("--run-dir", rp.runDir, "directory holding eval/players outputs")->required();
  sReport->add_option("--bin-width", rp.binWidth)->capture_default_str();
  sReport->add_option("--x-grid", rp.grid, "fractions of best runs")->capture_default_str();

  BenchArgs be;
  auto* sBench = app.add_subcommand("bench", "engine throughput benchmark");
  sBench->add_option("--width", be.width)->capture_default_str();
  sBench->add_option("--height", be.height)->capture_default_str();
  sBench->add_option("--colors", be.colors)->capture_default_str();
  sBench->add_option("--moves", be.moves)->capture_default_str();
  // lets a config.ini snapshot select and replay its subcommand
  for (CLI::App* s : {sGen, sTrain, sEval, sPlayers, sCorr, sReport, sBench}) s->configurable();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::string command = app.get_subcommands().front()->get_name();
  try {
    if (sGen->parsed()) cmd_gen_levels(app, g, gen);
    if (sTrain->parsed()) cmd_train(app, g, tr, ppo);
    if (sEval->parsed()) cmd_eval(app, g, ev);
    if (sPlayers->parsed()) cmd_simulate_players(app, g, pl);
    if (sCorr->parsed()) cmd_correlate(app, g, co);
    if (sReport->parsed()) cmd_report(app, rp);
    if (sBench->parsed()) cmd_bench(g, be);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const Error& e) {
    return report_fault(g.out, command, e, "library error");
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    return report_fault(g.out, command, e, "unexpected exception");
  }
  return kExitOk;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("blastlab");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace blastlab::cli
