#pragma once

#include <memory>
#include <string>

#include "blastlab/nn/checkpoint.hpp"
#include "blastlab/obs.hpp"

namespace blastlab {

// Picks a cell to tap from an observation. Implementations are immutable,
// so one agent may be shared by parallel evaluators.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string id() const = 0;
  // Color channels the agent wants in its observations (0 = level default).
  virtual int colors() const { return 0; }
  // Throws InvalidAction when the mask has no true cell.
  virtual int act(const Observation& obs, Rng& rng) const = 0;
};

class RandomAgent : public Agent {
 public:
  std::string id() const override { return "random"; }
  int act(const Observation& obs, Rng& rng) const override;
};

// Taps the largest cluster; ties go to the lowest row-major cell.
class GreedyAgent : public Agent {
 public:
  std::string id() const override { return "greedy"; }
  int act(const Observation& obs, Rng& rng) const override;
};

class PolicyAgent : public Agent {
 public:
  enum class Mode { Sample, Argmax };
  PolicyAgent(nn::Checkpoint ckpt, Mode mode, std::string name = "policy");

  std::string id() const override { return name_; }
  int colors() const override { return colors_; }
  int act(const Observation& obs, Rng& rng) const override;

  const nn::Checkpoint& checkpoint() const { return ckpt_; }
  Mode mode() const { return mode_; }

 private:
  nn::Checkpoint ckpt_;
  Mode mode_;
  std::string name_;
  int colors_;
};

// "random", "greedy", "policy:<checkpoint>[:argmax]" (":sample" also accepted).
std::unique_ptr<Agent> make_agent(const std::string& spec);

}  // namespace blastlab
