#include "blastlab/agents.hpp"

#include <cmath>
#include <vector>

#include "blastlab/error.hpp"

namespace blastlab {

namespace {

int count_valid(const Observation& obs) {
  int n = 0;
  for (bool m : obs.mask) n += m;
  if (n == 0) throw InvalidAction("no valid action in observation");
  return n;
}

}  // namespace

int RandomAgent::act(const Observation& obs, Rng& rng) const {
  int k = uniform_index(rng, count_valid(obs));
  for (std::size_t i = 0; i < obs.mask.size(); ++i) {
    if (obs.mask[i] && k-- == 0) return static_cast<int>(i);
  }
  return -1;  // unreachable
}

int GreedyAgent::act(const Observation& obs, Rng&) const {
  count_valid(obs);
  const int W = obs.width, H = obs.height, n = W * H;
  const int ch = obs.channels();
  std::vector<int> color(n, -1);
  for (int p = 0; p < n; ++p) {
    for (int c = 0; c < obs.colors; ++c) {
      if (obs.tensor[static_cast<std::size_t>(p) * ch + c] > 0.5f) color[p] = c;
    }
  }
  std::vector<int> label(n, -1);
  std::vector<int> stack;
  int best = -1, best_size = 0;
  for (int p = 0; p < n; ++p) {
    if (color[p] < 0 || label[p] >= 0) continue;
    int size = 0;
    stack.push_back(p);
    label[p] = p;
    while (!stack.empty()) {
      int q = stack.back();
      stack.pop_back();
      ++size;
      const int x = q % W, y = q / W;
      const int nb[4] = {x > 0 ? q - 1 : -1, x + 1 < W ? q + 1 : -1, y > 0 ? q - W : -1, y + 1 < H ? q + W : -1};
      for (int r : nb) {
        if (r >= 0 && label[r] < 0 && color[r] == color[p]) {
          label[r] = p;
          stack.push_back(r);
        }
      }
    }
    // p is the lowest cell of its cluster, so strict > keeps the lowest index
    if (size > best_size && obs.mask[p]) {
      best = p;
      best_size = size;
    }
  }
  if (best < 0) throw InvalidAction("no clickable cluster in observation");
  return best;
}

PolicyAgent::PolicyAgent(nn::Checkpoint ckpt, Mode mode, std::string name)
    : ckpt_(std::move(ckpt)), mode_(mode), name_(std::move(name)) {
  colors_ = static_cast<int>(ckpt_.channelLegend.size()) - kFixedChannels;
  if (colors_ < 1 || ckpt_.channelLegend != channel_legend(colors_)) {
    throw DataError("checkpoint channel legend is not an observation legend");
  }
  if (ckpt_.params.shape.inChannels != colors_ + kFixedChannels) throw DataError("checkpoint input width mismatch");
}

int PolicyAgent::act(const Observation& obs, Rng& rng) const {
  count_valid(obs);
  if (obs.channelLegend != ckpt_.channelLegend) throw ShapeError("observation channels do not match the policy");
  const auto& s = ckpt_.params.shape;
  if (obs.width != s.width || obs.height != s.height) throw ShapeError("board size does not match the policy");
  thread_local nn::Workspace<float> ws;
  nn::forward<float>(ckpt_.params, obs.tensor, 1, ws);
  const int cells = s.cells();
  std::span<const float> logits(ws.logits.data(), cells);
  if (mode_ == Mode::Argmax) {
    int best = -1;
    for (int j = 0; j < cells; ++j) {
      if (obs.mask[j] && (best < 0 || logits[j] > logits[best])) best = j;
    }
    return best;
  }
  std::vector<float> logp(cells);
  nn::masked_log_softmax<float>(logits, obs.mask, logp);
  double u = uniform01(rng), cum = 0.0;
  int last = -1;
  for (int j = 0; j < cells; ++j) {
    if (!obs.mask[j]) continue;
    last = j;
    cum += std::exp(static_cast<double>(logp[j]));
    if (u < cum) return j;
  }
  return last;
}

std::unique_ptr<Agent> make_agent(const std::string& spec) {
  if (spec == "random") return std::make_unique<RandomAgent>();
  if (spec == "greedy") return std::make_unique<GreedyAgent>();
  if (spec.rfind("policy:", 0) == 0) {
    std::string path = spec.substr(7);
    auto mode = PolicyAgent::Mode::Sample;
    for (auto [suffix, m] : {std::pair{":argmax", PolicyAgent::Mode::Argmax}, {":sample", PolicyAgent::Mode::Sample}}) {
      const std::string sfx = suffix;
      if (path.size() > sfx.size() && path.compare(path.size() - sfx.size(), sfx.size(), sfx) == 0) {
        path.resize(path.size() - sfx.size());
        mode = m;
        break;
      }
    }
    if (path.empty()) throw DataError("agent spec '" + spec + "' has no checkpoint path");
    std::string name = std::filesystem::path(path).stem().string();
    if (mode == PolicyAgent::Mode::Argmax) name += "-argmax";
    return std::make_unique<PolicyAgent>(nn::load_checkpoint(path), mode, name);
  }
  throw DataError("unknown agent spec '" + spec + "'");
}

}  // namespace blastlab
