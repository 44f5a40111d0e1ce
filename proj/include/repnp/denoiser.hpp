#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "repnp/image.hpp"
#include "repnp/nn.hpp"

namespace repnp {

/// Actions are integer residuals -13..13; index i adds (i - 13).
inline constexpr int kNumActions = 27;
inline constexpr int kActionOffset = 13;

inline constexpr int action_residual(int index) { return index - kActionOffset; }

struct ActionMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> actions;

  ActionMap() = default;
  ActionMap(int h, int w, std::uint8_t fill = kActionOffset)
      : height(h), width(w), actions(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}
};

struct EpisodeConfig {
  int steps = 5;
  double gamma = 0.95;

  void validate() const;
};

/// Per-pixel real-valued map (rewards, returns, values, probabilities),
/// row-major like ImageGray.
using PixelMap = std::vector<double>;

/// Maps an image in intensity units onto the network input scale [0, 1].
Tensor state_tensor(const ImageGray& img);

/// I' = clip(I + residual(a), 0, 255).
ImageGray transition(const ImageGray& state, const ActionMap& actions);

/// r_i = (x_i - prev_i)^2 - (x_i - cur_i)^2.
PixelMap reward_map(const ImageGray& clean, const ImageGray& previous, const ImageGray& current);

/// Discounted rewards-to-go via R_t = r_t + gamma * R_{t+1}.
std::vector<PixelMap> rewards_to_go(const std::vector<PixelMap>& rewards, double gamma);

/// Per-pixel argmax of the policy (lowest index wins ties).
ActionMap greedy_actions(const ForwardResult& fwd);

/// Runs cfg.steps greedy transitions.
ImageGray denoise_greedy(const PolicyValueNet& net, const ImageGray& noisy, const EpisodeConfig& cfg);

/// One sampled episode with everything PPO needs. Rewards are measured
/// against a clean target, so a batch can only be built when one exists.
struct TrajectoryBatch {
  std::vector<ImageGray> states;      // steps + 1
  std::vector<ActionMap> actions;     // steps
  std::vector<PixelMap> rewards;      // steps
  std::vector<PixelMap> old_probs;    // probability of the taken action
  std::vector<PixelMap> old_log_probs;
  std::vector<PixelMap> values;       // value estimates of states[t]

  int steps() const { return static_cast<int>(actions.size()); }
};

/// Samples actions from the per-pixel categorical policy. Throws DataError
/// when `clean` is missing.
TrajectoryBatch denoise_sampled(const PolicyValueNet& net, const ImageGray& noisy,
                                const std::optional<ImageGray>& clean, const EpisodeConfig& cfg,
                                std::uint64_t seed);

/// Strength-controlled denoiser: z = x + alpha * (D(x) - x) with
/// alpha = min(1, sigma / sigma_train).
ImageGray denoiser_as_prior(const PolicyValueNet& net, const ImageGray& x, double sigma,
                            const EpisodeConfig& cfg, double sigma_train = 25.0);

/// Prior callback used by the PnP engine: (iterate, sigma_k) -> z.
using DenoiserPrior = std::function<ImageGray(const ImageGray&, double)>;

/// Binds a network (by reference) into a DenoiserPrior.
DenoiserPrior make_drl_prior(const PolicyValueNet& net, EpisodeConfig cfg, double sigma_train = 25.0);

}  // namespace repnp
