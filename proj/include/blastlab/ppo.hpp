#pragma once

// PPO with invalid-action masking over parallel puzzle environments.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blastlab/engine.hpp"
#include "blastlab/nn/checkpoint.hpp"
#include "blastlab/nn/network.hpp"
#include "blastlab/obs.hpp"

namespace blastlab {

struct PPOConfig {
  int nEnvs = 8;
  int nSteps = 256;
  int nMinibatches = 64;
  double learningRate = 1e-4;
  double entropyCoef = 0.01;
  double clipRange = 0.2;
  double valueCoef = 0.5;
  double gamma = 0.99;
  double lambdaGae = 0.95;
  int updateEpochs = 4;
  int episodeStepCap = 100;
  double maxGradNorm = 0.5;  // <= 0 disables clipping
  long totalSteps = 0;
  uint64_t seed = 1;

  int batch_size() const { return nEnvs * nSteps; }
  int minibatch_size() const { return batch_size() / nMinibatches; }
  // Throws DataError when inconsistent.
  void validate() const;
};

// Reward for one move: progress share + win bonus - move cost.
inline constexpr double kWinBonus = 5.0;
inline constexpr double kMoveCost = 0.05;
double move_reward(int goalItems, int totalRequirement, bool won);

// One training environment: a game on a level drawn from a pool, with a
// per-episode color permutation and a step cap.
class TrainEnv {
 public:
  TrainEnv(std::vector<const Level*> pool, int colors, int stepCap, uint64_t seed);

  // Encoded, color-permuted observation of the current state.
  const Observation& observation() const { return obs_; }

  struct Step {
    double reward = 0.0;
    bool done = false;
    bool won = false;
    bool truncated = false;
    int moves = 0;  // episode length when done
  };
  Step step(int action);

  Rng& rng() { return rng_; }
  const Game& game() const { return *game_; }
  const std::vector<int>& permutation() const { return perm_; }

 private:
  void reset();
  void refresh_obs();

  std::vector<const Level*> pool_;
  int colors_;
  int stepCap_;
  Rng rng_;
  std::optional<Game> game_;
  std::vector<int> perm_;
  Observation obs_;
  int episodeSteps_ = 0;
};

// Transitions stored by (env, step): index = env * nSteps + step.
struct RolloutBuffer {
  int nEnvs = 0;
  int nSteps = 0;
  int obsSize = 0;  // floats per observation
  int cells = 0;
  std::vector<float> obs;
  std::vector<uint8_t> masks;
  std::vector<int> actions;
  std::vector<float> logProbs;
  std::vector<float> values;
  std::vector<float> rewards;
  std::vector<uint8_t> dones;     // episode ended with this transition
  std::vector<float> bootstrap;   // value of the state after the last step, per env

  // Episodes that finished during collection.
  std::vector<int> episodeMoves;
  std::vector<uint8_t> episodeWins;

  int size() const { return nEnvs * nSteps; }
  void resize(int envs, int steps, int obsFloats, int cellCount);
};

// Fills `buf` with nEnvs x nSteps transitions sampled from the masked
// policy. Each env uses its own RNG, so results do not depend on ordering.
void collect_rollouts(const nn::NetworkParams<float>& params, std::vector<TrainEnv>& envs, const PPOConfig& cfg,
                      RolloutBuffer& buf);

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Generalized advantage estimation in buffer order (not normalized).
Advantages compute_gae(const RolloutBuffer& buf, double gamma, double lambda);

// Scales to zero mean and unit standard deviation (unchanged when the
// spread is degenerate).
void normalize_advantages(std::vector<double>& adv);

// Clipped surrogate for one sample.
double clipped_surrogate(double ratio, double advantage, double clip);

template <class T>
struct Minibatch {
  int size = 0;
  std::vector<T> obs;
  std::vector<uint8_t> masks;
  std::vector<int> actions;
  std::vector<T> oldLogProbs;
  std::vector<T> advantages;
  std::vector<T> returns;
};

struct LossStats {
  double policyLoss = 0.0;
  double valueLoss = 0.0;   // mean squared error, before the coefficient
  double entropy = 0.0;
  double total = 0.0;
  double clipFraction = 0.0;
  double approxKl = 0.0;
};

// PPO loss over a minibatch. When `grads` is non-empty the gradient of the
// total loss with respect to every parameter is accumulated into it.
template <class T>
LossStats minibatch_loss(const nn::NetworkParams<T>& params, const Minibatch<T>& mb, const PPOConfig& cfg,
                         nn::Workspace<T>& ws, std::span<T> grads);

struct UpdateStats {
  double policyLoss = 0.0;
  double valueLoss = 0.0;
  double entropy = 0.0;
  double clipFraction = 0.0;
  double approxKl = 0.0;
  int minibatches = 0;
};

// Epochs of shuffled minibatch Adam steps. `rng` drives the shuffling.
UpdateStats ppo_update(nn::NetworkParams<float>& params, nn::AdamState<float>& adam, const RolloutBuffer& buf,
                       const PPOConfig& cfg, Rng& rng);

struct CurveRow {
  std::string phase;
  int updateIdx = 0;
  long envSteps = 0;
  double meanEpisodeMoves = 0.0;  // NaN when no episode finished
  double winRate = 0.0;           // NaN when no episode finished
  int episodes = 0;
  UpdateStats stats;
};

enum class ScenarioKind { OneStepCurriculum, OneStepTarget, TwoStep };
std::string to_string(ScenarioKind k);
ScenarioKind parse_scenario_kind(const std::string& s);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::OneStepCurriculum;
  std::vector<Level> curriculumLevels;
  std::optional<Level> targetLevel;
  // Steps per phase: one entry for one-step kinds, two (curriculum then
  // target) for TwoStep.
  std::vector<long> stepBudgets;
  // Color channels of the network input; 0 means the most colors used by
  // any scenario level.
  int colors = 0;

  void validate() const;
};

struct NamedCheckpoint {
  std::string name;
  nn::Checkpoint checkpoint;
};

struct ScenarioResult {
  std::vector<NamedCheckpoint> checkpoints;  // phase ends, in order; the last is final
  std::vector<CurveRow> curve;
  const nn::Checkpoint& final() const { return checkpoints.back().checkpoint; }
};

struct ScenarioOptions {
  // Starting weights; a fresh init is used when empty.
  std::optional<nn::NetworkParams<float>> init;
  std::function<void(const CurveRow&)> onUpdate;
  // Extra key/value pairs copied into every checkpoint.
  std::map<std::string, std::string> metadata;
  // Where to dump the offending rollout if the loss goes non-finite.
  std::filesystem::path dumpDir;
};

ScenarioResult run_scenario(const ScenarioSpec& spec, const PPOConfig& cfg, const ScenarioOptions& opts = {});

// Continues training `params` on a level pool for `steps` environment steps.
// Used for each scenario phase.
std::vector<CurveRow> train_phase(nn::NetworkParams<float>& params, nn::AdamState<float>& adam,
                                  const std::vector<const Level*>& pool, int colors, long steps,
                                  const PPOConfig& cfg, const std::string& phase, uint64_t phaseSeed,
                                  const std::function<void(const CurveRow&)>& onUpdate = {},
                                  const std::filesystem::path& dumpDir = {});

// Writes the transitions of a buffer as CSV (used when a run aborts).
void dump_buffer_csv(const RolloutBuffer& buf, const std::filesystem::path& path);

void write_curve_csv(const std::vector<CurveRow>& curve, const std::filesystem::path& path,
                     const std::string& configNote = "");

}  // namespace blastlab
