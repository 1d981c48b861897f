#include "blastlab/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "blastlab/error.hpp"

namespace blastlab {

void PPOConfig::validate() const {
  if (nEnvs < 1 || nSteps < 1 || nMinibatches < 1) throw DataError("nEnvs, nSteps and nMinibatches must be positive");
  if (batch_size() % nMinibatches != 0) throw DataError("nEnvs * nSteps must be divisible by nMinibatches");
  if (updateEpochs < 1) throw DataError("updateEpochs must be positive");
  if (episodeStepCap < 1) throw DataError("episodeStepCap must be positive");
  for (double v : {learningRate, entropyCoef, clipRange, valueCoef, gamma, lambdaGae}) {
    if (!(v >= 0.0)) throw DataError("PPO coefficients must be non-negative");
  }
  if (totalSteps < 0) throw DataError("totalSteps must be non-negative");
}

double move_reward(int goalItems, int totalRequirement, bool won) {
  double r = -kMoveCost;
  if (totalRequirement > 0) r += static_cast<double>(goalItems) / totalRequirement;
  if (won) r += kWinBonus;
  return r;
}

TrainEnv::TrainEnv(std::vector<const Level*> pool, int colors, int stepCap, uint64_t seed)
    : pool_(std::move(pool)), colors_(colors), stepCap_(stepCap), rng_(seed) {
  if (pool_.empty()) throw ContractError("training env needs at least one level");
  reset();
}

void TrainEnv::reset() {
  for (int attempt = 0; attempt < 100; ++attempt) {
    const Level* level = pool_[uniform_index(rng_, static_cast<int>(pool_.size()))];
    game_.emplace(*level, rng_());
    if (!game_->finished()) {
      perm_ = random_permutation(colors_, rng_);
      episodeSteps_ = 0;
      refresh_obs();
      return;
    }
  }
  throw Unresolvable("training levels keep dealing finished boards");
}

void TrainEnv::refresh_obs() {
  obs_ = encode(*game_, colors_);
  shuffle_colors_inplace(obs_, perm_);
}

TrainEnv::Step TrainEnv::step(int action) {
  auto r = game_->step(action);
  ++episodeSteps_;
  Step s;
  s.reward = move_reward(r.goalItems, game_->level().total_goal_requirement(), r.won);
  s.won = r.won;
  s.truncated = !game_->finished() && episodeSteps_ >= stepCap_;
  s.done = game_->finished() || s.truncated;
  if (s.done) {
    s.moves = episodeSteps_;
    reset();
  } else {
    refresh_obs();
  }
  return s;
}

void RolloutBuffer::resize(int envs, int steps, int obsFloats, int cellCount) {
  nEnvs = envs;
  nSteps = steps;
  obsSize = obsFloats;
  cells = cellCount;
  const std::size_t n = static_cast<std::size_t>(envs) * steps;
  obs.assign(n * obsFloats, 0.0f);
  masks.assign(n * cellCount, 0);
  actions.assign(n, 0);
  logProbs.assign(n, 0.0f);
  values.assign(n, 0.0f);
  rewards.assign(n, 0.0f);
  dones.assign(n, 0);
  bootstrap.assign(envs, 0.0f);
  episodeMoves.clear();
  episodeWins.clear();
}

namespace {

template <class T>
int sample_masked(std::span<const T> logp, Rng& rng) {
  double u = uniform01(rng);
  double cum = 0.0;
  int last = -1;
  for (std::size_t j = 0; j < logp.size(); ++j) {
    if (std::isinf(logp[j])) continue;
    last = static_cast<int>(j);
    cum += std::exp(static_cast<double>(logp[j]));
    if (u < cum) return last;
  }
  return last;
}

}  // namespace

void collect_rollouts(const nn::NetworkParams<float>& params, std::vector<TrainEnv>& envs, const PPOConfig& cfg,
                      RolloutBuffer& buf) {
  const int E = static_cast<int>(envs.size());
  if (E != cfg.nEnvs) throw ContractError("env count does not match config");
  const auto& s = params.shape;
  const int cells = s.cells();
  const int obsSize = cells * s.inChannels;
  buf.resize(E, cfg.nSteps, obsSize, cells);
  nn::Workspace<float> ws;
  std::vector<float> input(static_cast<std::size_t>(E) * obsSize);
  std::vector<float> logp(cells);
  std::vector<bool> mask(cells);

  auto gather = [&] {
    for (int e = 0; e < E; ++e) {
      const auto& o = envs[e].observation();
      if (static_cast<int>(o.tensor.size()) != obsSize) throw ShapeError("observation does not match network");
      std::copy(o.tensor.begin(), o.tensor.end(), input.begin() + static_cast<std::ptrdiff_t>(e) * obsSize);
    }
    nn::forward<float>(params, input, E, ws);
  };

  for (int t = 0; t < cfg.nSteps; ++t) {
    gather();
    for (int e = 0; e < E; ++e) {
      const std::size_t i = static_cast<std::size_t>(e) * cfg.nSteps + t;
      const auto& o = envs[e].observation();
      std::copy(o.tensor.begin(), o.tensor.end(), buf.obs.begin() + static_cast<std::ptrdiff_t>(i * obsSize));
      for (int c = 0; c < cells; ++c) {
        mask[c] = o.mask[c];
        buf.masks[i * cells + c] = o.mask[c];
      }
      std::span<const float> row(ws.logits.data() + static_cast<std::size_t>(e) * cells, cells);
      nn::masked_log_softmax<float>(row, mask, logp);
      int a = sample_masked<float>(logp, envs[e].rng());
      buf.actions[i] = a;
      buf.logProbs[i] = logp[a];
      buf.values[i] = ws.values[e];
      auto step = envs[e].step(a);
      buf.rewards[i] = static_cast<float>(step.reward);
      buf.dones[i] = step.done;
      if (step.done) {
        buf.episodeMoves.push_back(step.moves);
        buf.episodeWins.push_back(step.won);
      }
    }
  }
  gather();
  std::copy(ws.values.begin(), ws.values.begin() + E, buf.bootstrap.begin());
  nn::check_finite<float>(buf.logProbs, "rollout log-probabilities");
  nn::check_finite<float>(buf.values, "rollout values");
}

Advantages compute_gae(const RolloutBuffer& buf, double gamma, double lambda) {
  Advantages out;
  out.advantages.assign(buf.size(), 0.0);
  out.returns.assign(buf.size(), 0.0);
  for (int e = 0; e < buf.nEnvs; ++e) {
    double next_adv = 0.0;
    double next_value = buf.bootstrap[e];
    for (int t = buf.nSteps - 1; t >= 0; --t) {
      const std::size_t i = static_cast<std::size_t>(e) * buf.nSteps + t;
      const double live = buf.dones[i] ? 0.0 : 1.0;
      const double delta = buf.rewards[i] + gamma * next_value * live - buf.values[i];
      next_adv = delta + gamma * lambda * live * next_adv;
      out.advantages[i] = next_adv;
      out.returns[i] = next_adv + buf.values[i];
      next_value = buf.values[i];
    }
  }
  return out;
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.size() < 2) return;
  double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / adv.size();
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  // sample std, as in common PPO implementations
  double sd = std::sqrt(var / (adv.size() - 1));
  for (double& a : adv) a = (a - mean) / (sd + 1e-8);
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage);
}

template <class T>
LossStats minibatch_loss(const nn::NetworkParams<T>& params, const Minibatch<T>& mb, const PPOConfig& cfg,
                         nn::Workspace<T>& ws, std::span<T> grads) {
  const int B = mb.size;
  const int cells = params.shape.cells();
  nn::forward<T>(params, mb.obs, B, ws);
  const bool want_grads = !grads.empty();
  std::vector<T> dlogits(want_grads ? static_cast<std::size_t>(B) * cells : 0, T(0));
  std::vector<T> dvalues(want_grads ? B : 0, T(0));
  std::vector<T> logp(cells);
  std::vector<bool> mask(cells);
  const double clip = cfg.clipRange;
  double pl = 0.0, vl = 0.0, ent = 0.0, clipped = 0.0, kl = 0.0;

  for (int i = 0; i < B; ++i) {
    for (int c = 0; c < cells; ++c) mask[c] = mb.masks[static_cast<std::size_t>(i) * cells + c] != 0;
    std::span<const T> row(ws.logits.data() + static_cast<std::size_t>(i) * cells, cells);
    nn::masked_log_softmax<T>(row, mask, logp);
    const int a = mb.actions[i];
    if (!mask[a]) throw ContractError("minibatch action is masked");
    const T lp = logp[a];
    const T log_ratio = lp - mb.oldLogProbs[i];
    const T ratio = std::exp(log_ratio);
    const T A = mb.advantages[i];
    const T s1 = ratio * A;
    const T s2 = std::clamp(ratio, T(1 - clip), T(1 + clip)) * A;
    pl -= static_cast<double>(std::min(s1, s2));
    if (std::abs(static_cast<double>(ratio) - 1.0) > clip) clipped += 1.0;
    kl += static_cast<double>((ratio - T(1)) - log_ratio);
    T H = 0;
    for (int j = 0; j < cells; ++j) {
      if (mask[j]) H -= std::exp(logp[j]) * logp[j];
    }
    ent += static_cast<double>(H);
    const T v = ws.values[i];
    const T err = v - mb.returns[i];
    vl += static_cast<double>(err * err);

    if (want_grads) {
      const T invB = T(1) / T(B);
      // d(-min(s1, s2))/dlogp_a; zero when the clipped branch is selected
      const T g_lp = s1 <= s2 ? -A * ratio * invB : T(0);
      const T g_ent = static_cast<T>(cfg.entropyCoef) * invB;
      T* d = dlogits.data() + static_cast<std::size_t>(i) * cells;
      for (int j = 0; j < cells; ++j) {
        if (!mask[j]) continue;
        const T p = std::exp(logp[j]);
        d[j] = g_lp * ((j == a ? T(1) : T(0)) - p) + g_ent * p * (logp[j] + H);
      }
      dvalues[i] = static_cast<T>(2.0 * cfg.valueCoef) * err * invB;
    }
  }
  if (want_grads) nn::backward<T>(params, dlogits, dvalues, ws, grads);

  LossStats st;
  st.policyLoss = pl / B;
  st.valueLoss = vl / B;
  st.entropy = ent / B;
  st.total = st.policyLoss + cfg.valueCoef * st.valueLoss - cfg.entropyCoef * st.entropy;
  st.clipFraction = clipped / B;
  st.approxKl = kl / B;
  return st;
}

template LossStats minibatch_loss<float>(const nn::NetworkParams<float>&, const Minibatch<float>&, const PPOConfig&,
                                         nn::Workspace<float>&, std::span<float>);
template LossStats minibatch_loss<double>(const nn::NetworkParams<double>&, const Minibatch<double>&,
                                          const PPOConfig&, nn::Workspace<double>&, std::span<double>);

UpdateStats ppo_update(nn::NetworkParams<float>& params, nn::AdamState<float>& adam, const RolloutBuffer& buf,
                       const PPOConfig& cfg, Rng& rng) {
  auto gae = compute_gae(buf, cfg.gamma, cfg.lambdaGae);
  normalize_advantages(gae.advantages);
  const int N = buf.size();
  const int B = N / cfg.nMinibatches;
  const int obsSize = buf.obsSize;
  const int cells = buf.cells;
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);

  Minibatch<float> mb;
  mb.size = B;
  mb.obs.resize(static_cast<std::size_t>(B) * obsSize);
  mb.masks.resize(static_cast<std::size_t>(B) * cells);
  mb.actions.resize(B);
  mb.oldLogProbs.resize(B);
  mb.advantages.resize(B);
  mb.returns.resize(B);
  nn::Workspace<float> ws;
  std::vector<float> grads(params.count());
  nn::AdamConfig ac;
  ac.lr = cfg.learningRate;

  UpdateStats out;
  for (int epoch = 0; epoch < cfg.updateEpochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int m = 0; m < cfg.nMinibatches; ++m) {
      for (int k = 0; k < B; ++k) {
        const std::size_t i = order[static_cast<std::size_t>(m) * B + k];
        std::copy_n(buf.obs.begin() + static_cast<std::ptrdiff_t>(i * obsSize), obsSize,
                    mb.obs.begin() + static_cast<std::ptrdiff_t>(k) * obsSize);
        std::copy_n(buf.masks.begin() + static_cast<std::ptrdiff_t>(i * cells), cells,
                    mb.masks.begin() + static_cast<std::ptrdiff_t>(k) * cells);
        mb.actions[k] = buf.actions[i];
        mb.oldLogProbs[k] = buf.logProbs[i];
        mb.advantages[k] = static_cast<float>(gae.advantages[i]);
        mb.returns[k] = static_cast<float>(gae.returns[i]);
      }
      std::fill(grads.begin(), grads.end(), 0.0f);
      auto st = minibatch_loss<float>(params, mb, cfg, ws, grads);
      if (!std::isfinite(st.total)) throw NaNLoss("PPO loss became non-finite");
      nn::check_finite<float>(grads, "gradients");
      if (cfg.maxGradNorm > 0) {
        double sq = 0.0;
        for (float g : grads) sq += static_cast<double>(g) * g;
        const double norm = std::sqrt(sq);
        if (norm > cfg.maxGradNorm) {
          const float scale = static_cast<float>(cfg.maxGradNorm / (norm + 1e-6));
          for (float& g : grads) g *= scale;
        }
      }
      nn::adam_step<float>(params.data, grads, adam, ac);
      out.policyLoss += st.policyLoss;
      out.valueLoss += st.valueLoss;
      out.entropy += st.entropy;
      out.clipFraction += st.clipFraction;
      out.approxKl += st.approxKl;
      ++out.minibatches;
    }
  }
  if (out.minibatches > 0) {
    const double n = out.minibatches;
    out.policyLoss /= n;
    out.valueLoss /= n;
    out.entropy /= n;
    out.clipFraction /= n;
    out.approxKl /= n;
  }
  nn::check_finite<float>(params.data, "parameters");
  return out;
}

}  // namespace blastlab
