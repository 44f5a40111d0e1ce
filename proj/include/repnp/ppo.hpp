#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "repnp/denoiser.hpp"
#include "repnp/image.hpp"
#include "repnp/nn.hpp"

namespace repnp {

struct PPOConfig {
  double clip_epsilon = 0.2;
  double entropy_coeff = 0.01;
  double gamma = 0.95;
  int epochs_per_batch = 4;
  int batch_size = 32;
  /// Patches per gradient step within a pass; 0 means the whole batch.
  int minibatch_size = 0;
  double learning_rate = 1e-4;
  int total_epochs = 600;
  double sigma_train = 25.0;
  int patch_size = 70;
  double value_loss_weight = 1.0;
  /// Constant factor applied to per-pixel rewards before computing returns.
  double reward_scale = 1.0 / 255.0;

  void validate() const;
};

/// A_t = R_t - V_t, no normalisation.
PixelMap advantage(std::span<const double> returns, std::span<const double> values);

/// min(r * A, clip(r, 1 - eps, 1 + eps) * A) with r = new / old, per pixel.
PixelMap ppo_clip_objective(std::span<const double> new_prob, std::span<const double> old_prob,
                            std::span<const double> adv, double epsilon);

/// Shannon entropy in nats of each pixel's action distribution. `policy` is
/// action-major with `pixels` entries per action; 0 ln 0 counts as 0.
PixelMap policy_entropy(std::span<const double> policy, std::size_t pixels, int num_actions);

/// Mean of (V - R)^2.
double value_loss(std::span<const double> predicted, std::span<const double> returns);

/// Per-pixel-step inputs for the PPO loss of one forward pass.
struct PPOSample {
  std::span<const std::uint8_t> actions;
  std::span<const double> old_log_probs;
  std::span<const double> advantages;
  std::span<const double> returns;
};

struct LossTerms {
  double surrogate = 0.0;   // sum of clipped surrogate terms
  double entropy = 0.0;     // sum of per-pixel entropies
  double value_sq_err = 0.0;  // sum of (V - R)^2
  std::size_t count = 0;

  LossTerms& operator+=(const LossTerms& o);
};

/// Contribution of one forward pass to
///   L = -(1/M) sum [clip_objective + eta * H] + c_v (1/M) sum (V - R)^2
/// where M = `normalizer` is the number of pixel-steps in the whole batch.
/// Writes dL/dlogits (action-major) and dL/dV, and returns the raw sums.
LossTerms ppo_loss_gradients(std::span<const double> policy, std::span<const double> log_policy,
                             std::span<const double> value, std::size_t pixels, int num_actions,
                             const PPOSample& sample, const PPOConfig& cfg, double normalizer,
                             std::span<double> logit_grad, std::span<double> value_grad);

struct EpochMetrics {
  int epoch = 0;
  double mean_reward = 0.0;  // per-pixel undiscounted episode reward
  double entropy = 0.0;      // mean policy entropy over collected states
  double value_loss = 0.0;   // value MSE before the update
  double holdout_psnr = 0.0;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const EpochMetrics& m);

struct TrainHooks {
  /// Clean images used for held-out PSNR after every epoch; when empty the
  /// first training image is used.
  std::vector<ImageGray> holdout;
  int holdout_patches = 4;
  /// Invoked after every epoch with the updated network.
  std::function<void(const EpochMetrics&, const PolicyValueNet&)> on_epoch;
};

/// Synchronous PPO-Clip with entropy bonus and joint value regression. The
/// network is updated in place; returns one metrics row per epoch. Throws
/// NumericalFault on non-finite losses or if the mean policy entropy drops
/// below 0.01 nats before a quarter of the epochs.
std::vector<EpochMetrics> train(const std::vector<ImageGray>& trainset, PolicyValueNet& net,
                                const PPOConfig& cfg, const EpisodeConfig& episode, std::uint64_t seed,
                                const TrainHooks& hooks = {});

/// Mean PSNR of greedy denoising over fixed noisy crops of `clean`, plus
/// the mean PSNR of the noisy inputs.
struct HoldoutScore {
  double denoised_psnr = 0.0;
  double noisy_psnr = 0.0;
};
HoldoutScore evaluate_denoiser(const PolicyValueNet& net, const std::vector<ImageGray>& clean,
                               const EpisodeConfig& episode, double sigma, int patch_size,
                               int patches, std::uint64_t seed);

}  // namespace repnp
