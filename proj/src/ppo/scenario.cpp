#include <algorithm>
#include <cmath>
#include <limits>

#include "blastlab/error.hpp"
#include "blastlab/ppo.hpp"
#include "blastlab/util/csv.hpp"

namespace blastlab {

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::OneStepCurriculum: return "one-step-curriculum";
    case ScenarioKind::OneStepTarget: return "one-step-target";
    case ScenarioKind::TwoStep: return "two-step";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(const std::string& s) {
  if (s == "one-step-curriculum" || s == "curriculum") return ScenarioKind::OneStepCurriculum;
  if (s == "one-step-target" || s == "target") return ScenarioKind::OneStepTarget;
  if (s == "two-step") return ScenarioKind::TwoStep;
  throw DataError("unknown scenario '" + s + "'");
}

void ScenarioSpec::validate() const {
  const bool needCurriculum = kind != ScenarioKind::OneStepTarget;
  const bool needTarget = kind != ScenarioKind::OneStepCurriculum;
  if (needCurriculum && curriculumLevels.empty()) throw DataError(to_string(kind) + " needs curriculum levels");
  if (needTarget && !targetLevel) throw DataError(to_string(kind) + " needs a target level");
  const std::size_t phases = kind == ScenarioKind::TwoStep ? 2 : 1;
  if (stepBudgets.size() != phases) {
    throw DataError(to_string(kind) + " needs " + std::to_string(phases) + " step budget(s)");
  }
  for (long b : stepBudgets) {
    if (b < 0) throw DataError("step budgets must be non-negative");
  }
  std::vector<const Level*> all;
  if (needCurriculum) {
    for (const auto& l : curriculumLevels) all.push_back(&l);
  }
  if (needTarget) all.push_back(&*targetLevel);
  for (const Level* l : all) {
    if (l->width != all.front()->width || l->height != all.front()->height) {
      throw DataError("scenario levels must share one board size (" + l->id + " differs)");
    }
    if (colors != 0 && l->colorCount > colors) throw DataError("level " + l->id + " uses more colors than the network");
  }
}

void dump_buffer_csv(const RolloutBuffer& buf, const std::filesystem::path& path) {
  csv::Writer w(path, {"env", "step", "action", "logProb", "value", "reward", "done"});
  for (int e = 0; e < buf.nEnvs; ++e) {
    for (int t = 0; t < buf.nSteps; ++t) {
      const std::size_t i = static_cast<std::size_t>(e) * buf.nSteps + t;
      w.row({std::to_string(e), std::to_string(t), std::to_string(buf.actions[i]), csv::fmt(buf.logProbs[i]),
             csv::fmt(buf.values[i]), csv::fmt(buf.rewards[i]), std::to_string(buf.dones[i])});
    }
  }
  w.close();
}

std::vector<CurveRow> train_phase(nn::NetworkParams<float>& params, nn::AdamState<float>& adam,
                                  const std::vector<const Level*>& pool, int colors, long steps,
                                  const PPOConfig& cfg, const std::string& phase, uint64_t phaseSeed,
                                  const std::function<void(const CurveRow&)>& onUpdate,
                                  const std::filesystem::path& dumpDir) {
  cfg.validate();
  std::vector<CurveRow> curve;
  if (steps <= 0) return curve;
  std::vector<TrainEnv> envs;
  envs.reserve(cfg.nEnvs);
  for (int e = 0; e < cfg.nEnvs; ++e) envs.emplace_back(pool, colors, cfg.episodeStepCap, derive_seed(phaseSeed, e));
  Rng shuffle_rng(derive_seed(phaseSeed, 0x5eedULL, 1));
  const long batch = cfg.batch_size();
  const long updates = (steps + batch - 1) / batch;
  RolloutBuffer buf;
  for (long u = 0; u < updates; ++u) {
    collect_rollouts(params, envs, cfg, buf);
    CurveRow row;
    row.phase = phase;
    row.updateIdx = static_cast<int>(u);
    row.envSteps = (u + 1) * batch;
    row.episodes = static_cast<int>(buf.episodeMoves.size());
    if (row.episodes > 0) {
      double moves = 0.0, wins = 0.0;
      for (std::size_t k = 0; k < buf.episodeMoves.size(); ++k) {
        moves += buf.episodeMoves[k];
        wins += buf.episodeWins[k];
      }
      row.meanEpisodeMoves = moves / row.episodes;
      row.winRate = wins / row.episodes;
    } else {
      row.meanEpisodeMoves = row.winRate = std::numeric_limits<double>::quiet_NaN();
    }
    try {
      row.stats = ppo_update(params, adam, buf, cfg, shuffle_rng);
    } catch (const NaNLoss&) {
      if (!dumpDir.empty()) {
        std::filesystem::create_directories(dumpDir);
        dump_buffer_csv(buf, dumpDir / ("nan_buffer_" + phase + "_" + std::to_string(u) + ".csv"));
      }
      throw;
    }
    curve.push_back(row);
    if (onUpdate) onUpdate(row);
  }
  return curve;
}

namespace {

nn::Checkpoint make_checkpoint(const nn::NetworkParams<float>& params, int colors, const std::string& scenario,
                               const std::string& phase, long steps, double referenceBudget, const PPOConfig& cfg,
                               const std::map<std::string, std::string>& extra) {
  nn::Checkpoint ck;
  ck.channelLegend = channel_legend(colors);
  ck.params = params;
  ck.metadata = extra;
  ck.metadata["scenario"] = scenario;
  ck.metadata["phase"] = phase;
  ck.metadata["colors"] = std::to_string(colors);
  ck.metadata["phaseSteps"] = std::to_string(steps);
  ck.metadata["seed"] = std::to_string(cfg.seed);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", static_cast<double>(steps) / referenceBudget);
  ck.metadata["stepScale"] = buf;
  return ck;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec, const PPOConfig& cfg, const ScenarioOptions& opts) {
  spec.validate();
  cfg.validate();
  const bool useCurriculum = spec.kind != ScenarioKind::OneStepTarget;
  const bool useTarget = spec.kind != ScenarioKind::OneStepCurriculum;
  std::vector<const Level*> curriculum;
  if (useCurriculum) {
    for (const auto& l : spec.curriculumLevels) curriculum.push_back(&l);
  }
  const Level* first = useCurriculum ? curriculum.front() : &*spec.targetLevel;
  int colors = spec.colors;
  if (colors == 0) {
    for (const Level* l : curriculum) colors = std::max(colors, l->colorCount);
    if (useTarget) colors = std::max(colors, spec.targetLevel->colorCount);
  }
  nn::NetShape shape;
  shape.height = first->height;
  shape.width = first->width;
  shape.inChannels = colors + kFixedChannels;
  nn::NetworkParams<float> params = opts.init ? *opts.init : nn::init_params<float>(shape, derive_seed(cfg.seed, 7));
  if (!(params.shape == shape)) throw ShapeError("initial weights do not match the scenario's board");
  nn::AdamState<float> adam;

  // Full-scale reference budgets, used only to record the scale factor.
  constexpr double kCurriculumBudget = 35e6;
  constexpr double kTargetBudget = 1e6;

  ScenarioResult result;
  const std::string name = to_string(spec.kind);
  auto extend = [&](std::vector<CurveRow> rows) {
    result.curve.insert(result.curve.end(), rows.begin(), rows.end());
  };
  if (useCurriculum) {
    const long steps = spec.stepBudgets[0];
    extend(train_phase(params, adam, curriculum, colors, steps, cfg, "curriculum", derive_seed(cfg.seed, 1),
                       opts.onUpdate, opts.dumpDir));
    result.checkpoints.push_back(
        {"curriculum", make_checkpoint(params, colors, name, "curriculum", steps, kCurriculumBudget, cfg, opts.metadata)});
  }
  if (useTarget) {
    const long steps = spec.stepBudgets.back();
    std::vector<const Level*> pool{&*spec.targetLevel};
    extend(train_phase(params, adam, pool, colors, steps, cfg, "target", derive_seed(cfg.seed, 2), opts.onUpdate,
                       opts.dumpDir));
    auto ck = make_checkpoint(params, colors, name, "target", steps, kTargetBudget, cfg, opts.metadata);
    ck.metadata["targetLevel"] = spec.targetLevel->id;
    result.checkpoints.push_back({"target", std::move(ck)});
  }
  return result;
}

void write_curve_csv(const std::vector<CurveRow>& curve, const std::filesystem::path& path,
                     const std::string& configNote) {
  csv::Writer w(path,
                {"phase", "updateIdx", "envSteps", "meanEpisodeMoves", "winRate", "episodes", "policyLoss",
                 "valueLoss", "entropy", "clipFraction", "approxKl"},
                configNote);
  for (const auto& r : curve) {
    w.row({r.phase, std::to_string(r.updateIdx), std::to_string(r.envSteps), csv::fmt(r.meanEpisodeMoves),
           csv::fmt(r.winRate), std::to_string(r.episodes), csv::fmt(r.stats.policyLoss),
           csv::fmt(r.stats.valueLoss), csv::fmt(r.stats.entropy), csv::fmt(r.stats.clipFraction),
           csv::fmt(r.stats.approxKl)});
  }
  w.close();
}

}  // namespace blastlab
