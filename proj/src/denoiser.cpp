#include "repnp/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "repnp/errors.hpp"

namespace repnp {

void EpisodeConfig::validate() const {
  if (steps < 1) throw ConfigError("episode length T must be at least 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("discount gamma must lie in (0, 1]");
}

Tensor state_tensor(const ImageGray& img) {
  Tensor t(1, img.height(), img.width());
  for (std::size_t i = 0; i < img.size(); ++i) t.data[i] = img[i] / 255.0;
  return t;
}

ImageGray transition(const ImageGray& state, const ActionMap& actions) {
  if (state.height() != actions.height || state.width() != actions.width) {
    throw ShapeError("transition: action map does not match image dimensions");
  }
  ImageGray next = state;
  for (std::size_t i = 0; i < next.size(); ++i) {
    const int a = actions.actions[i];
    if (a >= kNumActions) throw ConfigError("action index out of range: " + std::to_string(a));
    next[i] = std::clamp(next[i] + action_residual(a), 0.0, 255.0);
  }
  return next;
}

PixelMap reward_map(const ImageGray& clean, const ImageGray& previous, const ImageGray& current) {
  require_same_shape(clean, previous, "reward_map");
  require_same_shape(clean, current, "reward_map");
  PixelMap r(clean.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double before = clean[i] - previous[i];
    const double after = clean[i] - current[i];
    r[i] = (before - after) * (before + after);
  }
  return r;
}

std::vector<PixelMap> rewards_to_go(const std::vector<PixelMap>& rewards, double gamma) {
  if (rewards.empty()) throw ConfigError("rewards_to_go needs at least one step");
  const std::size_t n = rewards.front().size();
  for (const PixelMap& r : rewards) {
    if (r.size() != n) throw ShapeError("rewards_to_go: reward maps differ in size");
  }
  std::vector<PixelMap> returns(rewards.size(), PixelMap(n, 0.0));
  returns.back() = rewards.back();
  for (std::size_t t = rewards.size() - 1; t-- > 0;) {
    for (std::size_t i = 0; i < n; ++i) returns[t][i] = rewards[t][i] + gamma * returns[t + 1][i];
  }
  return returns;
}

ActionMap greedy_actions(const ForwardResult& fwd) {
  ActionMap out(fwd.height, fwd.width);
  const std::size_t n = fwd.pixels();
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    double best_p = fwd.policy[i];
    for (int a = 1; a < fwd.num_actions; ++a) {
      const double p = fwd.policy[a * n + i];
      if (p > best_p) {
        best_p = p;
        best = a;
      }
    }
    out.actions[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

namespace {

void require_action_space(const PolicyValueNet& net) {
  if (net.architecture().num_actions != kNumActions) {
    throw ConfigError("denoiser network must have " + std::to_string(kNumActions) + " actions");
  }
}

}  // namespace

ImageGray denoise_greedy(const PolicyValueNet& net, const ImageGray& noisy, const EpisodeConfig& cfg) {
  cfg.validate();
  require_action_space(net);
  ImageGray state = noisy;
  for (int t = 0; t < cfg.steps; ++t) {
    const ForwardResult fwd = forward(net, state_tensor(state), Heads::PolicyOnly, false);
    state = transition(state, greedy_actions(fwd));
  }
  return state;
}

TrajectoryBatch denoise_sampled(const PolicyValueNet& net, const ImageGray& noisy,
                                const std::optional<ImageGray>& clean, const EpisodeConfig& cfg,
                                std::uint64_t seed) {
  cfg.validate();
  require_action_space(net);
  if (!clean) throw DataError("sampled trajectories need a clean target to compute rewards");
  require_same_shape(*clean, noisy, "denoise_sampled");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  TrajectoryBatch batch;
  batch.states.push_back(noisy);
  const std::size_t n = noisy.size();
  for (int t = 0; t < cfg.steps; ++t) {
    const ImageGray& state = batch.states.back();
    const ForwardResult fwd = forward(net, state_tensor(state), Heads::PolicyAndValue, false);
    ActionMap actions(state.height(), state.width());
    PixelMap probs(n);
    PixelMap log_probs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = uniform(rng);
      double cumulative = 0.0;
      int chosen = kNumActions - 1;
      for (int a = 0; a < kNumActions; ++a) {
        cumulative += fwd.policy[a * n + i];
        if (u < cumulative) {
          chosen = a;
          break;
        }
      }
      // Rounding can leave the cumulative sum just below u; never pick a
      // zero-probability tail action in that case.
      while (chosen > 0 && fwd.policy[chosen * n + i] == 0.0) --chosen;
      actions.actions[i] = static_cast<std::uint8_t>(chosen);
      probs[i] = fwd.policy[chosen * n + i];
      log_probs[i] = fwd.log_policy[chosen * n + i];
    }
    ImageGray next = transition(state, actions);
    batch.rewards.push_back(reward_map(*clean, state, next));
    batch.values.push_back(fwd.value);
    batch.old_probs.push_back(std::move(probs));
    batch.old_log_probs.push_back(std::move(log_probs));
    batch.actions.push_back(std::move(actions));
    batch.states.push_back(std::move(next));
  }
  return batch;
}

ImageGray denoiser_as_prior(const PolicyValueNet& net, const ImageGray& x, double sigma,
                            const EpisodeConfig& cfg, double sigma_train) {
  if (!(sigma > 0.0)) throw ConfigError("denoiser strength sigma must be positive");
  if (!(sigma_train > 0.0)) throw ConfigError("training sigma must be positive");
  const double alpha = std::min(1.0, sigma / sigma_train);
  const ImageGray denoised = denoise_greedy(net, x, cfg);
  if (alpha == 1.0) return denoised;
  ImageGray z = x;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + alpha * (denoised[i] - x[i]);
  return z;
}

DenoiserPrior make_drl_prior(const PolicyValueNet& net, EpisodeConfig cfg, double sigma_train) {
  cfg.validate();
  return [&net, cfg, sigma_train](const ImageGray& x, double sigma) {
    return denoiser_as_prior(net, x, sigma, cfg, sigma_train);
  };
}

}  // namespace repnp
