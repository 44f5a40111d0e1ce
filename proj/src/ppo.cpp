#include "repnp/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "repnp/errors.hpp"

namespace repnp {

void PPOConfig::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ConfigError("clip epsilon must lie in (0, 1)");
  if (!(entropy_coeff >= 0.0)) throw ConfigError("entropy coefficient must be non-negative");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (epochs_per_batch < 1) throw ConfigError("epochs_per_batch must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (minibatch_size < 0) throw ConfigError("minibatch_size must be non-negative");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (total_epochs < 1) throw ConfigError("total_epochs must be positive");
  if (!(sigma_train > 0.0)) throw ConfigError("sigma_train must be positive");
  if (patch_size < 1) throw ConfigError("patch_size must be positive");
  if (!(value_loss_weight >= 0.0)) throw ConfigError("value loss weight must be non-negative");
  if (!(reward_scale > 0.0)) throw ConfigError("reward scale must be positive");
}

PixelMap advantage(std::span<const double> returns, std::span<const double> values) {
  if (returns.size() != values.size()) throw ShapeError("advantage: returns/values size mismatch");
  PixelMap out(returns.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = returns[i] - values[i];
  return out;
}

PixelMap ppo_clip_objective(std::span<const double> new_prob, std::span<const double> old_prob,
                            std::span<const double> adv, double epsilon) {
  if (new_prob.size() != old_prob.size() || new_prob.size() != adv.size()) {
    throw ShapeError("ppo_clip_objective: operand size mismatch");
  }
  PixelMap out(adv.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(old_prob[i] > 0.0)) throw NumericalFault("ppo_clip_objective: zero old probability");
    const double ratio = new_prob[i] / old_prob[i];
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    out[i] = std::min(ratio * adv[i], clipped * adv[i]);
  }
  return out;
}

PixelMap policy_entropy(std::span<const double> policy, std::size_t pixels, int num_actions) {
  if (policy.size() != pixels * static_cast<std::size_t>(num_actions)) {
    throw ShapeError("policy_entropy: policy size does not match pixels x actions");
  }
  PixelMap h(pixels, 0.0);
  for (int a = 0; a < num_actions; ++a) {
    const double* p = policy.data() + static_cast<std::size_t>(a) * pixels;
    for (std::size_t i = 0; i < pixels; ++i) {
      if (p[i] > 0.0) h[i] -= p[i] * std::log(p[i]);
    }
  }
  return h;
}

double value_loss(std::span<const double> predicted, std::span<const double> returns) {
  if (predicted.size() != returns.size()) throw ShapeError("value_loss: size mismatch");
  if (predicted.empty()) throw ShapeError("value_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - returns[i];
    acc += d * d;
  }
  return acc / static_cast<double>(predicted.size());
}

LossTerms& LossTerms::operator+=(const LossTerms& o) {
  surrogate += o.surrogate;
  entropy += o.entropy;
  value_sq_err += o.value_sq_err;
  count += o.count;
  return *this;
}

LossTerms ppo_loss_gradients(std::span<const double> policy, std::span<const double> log_policy,
                             std::span<const double> value, std::size_t pixels, int num_actions,
                             const PPOSample& sample, const PPOConfig& cfg, double normalizer,
                             std::span<double> logit_grad, std::span<double> value_grad) {
  const std::size_t na = static_cast<std::size_t>(num_actions);
  if (policy.size() != pixels * na || log_policy.size() != policy.size() ||
      logit_grad.size() != policy.size()) {
    throw ShapeError("ppo_loss_gradients: policy size mismatch");
  }
  if (sample.actions.size() != pixels || sample.old_log_probs.size() != pixels ||
      sample.advantages.size() != pixels || sample.returns.size() != pixels) {
    throw ShapeError("ppo_loss_gradients: sample size mismatch");
  }
  const bool with_value = !value.empty();
  if (with_value && (value.size() != pixels || value_grad.size() != pixels)) {
    throw ShapeError("ppo_loss_gradients: value size mismatch");
  }
  if (!(normalizer > 0.0)) throw ConfigError("ppo_loss_gradients: normalizer must be positive");

  const double inv_m = 1.0 / normalizer;
  const double eps = cfg.clip_epsilon;
  const double eta = cfg.entropy_coeff;
  LossTerms terms;
  terms.count = pixels;
  for (std::size_t i = 0; i < pixels; ++i) {
    const int a = sample.actions[i];
    const double adv = sample.advantages[i];
    const double ratio = std::exp(log_policy[a * pixels + i] - sample.old_log_probs[i]);
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    const double unclipped_term = ratio * adv;
    const double clipped_term = clipped * adv;
    terms.surrogate += std::min(unclipped_term, clipped_term);
    // The min selects the unclipped branch (gradient A * r * dlog p) unless
    // the clipped branch is strictly smaller.
    const double surr_scale = unclipped_term <= clipped_term ? adv * ratio : 0.0;

    double entropy = 0.0;
    for (std::size_t k = 0; k < na; ++k) {
      const double p = policy[k * pixels + i];
      if (p > 0.0) entropy -= p * log_policy[k * pixels + i];
    }
    terms.entropy += entropy;

    for (std::size_t k = 0; k < na; ++k) {
      const double p = policy[k * pixels + i];
      const double indicator = static_cast<int>(k) == a ? 1.0 : 0.0;
      const double d_surr = surr_scale * (indicator - p);
      // dH/dz_k = -p_k (ln p_k + H); the p_k = 0 limit is 0.
      const double d_entropy = p > 0.0 ? -p * (log_policy[k * pixels + i] + entropy) : 0.0;
      logit_grad[k * pixels + i] = -inv_m * (d_surr + eta * d_entropy);
    }

    if (with_value) {
      const double err = value[i] - sample.returns[i];
      terms.value_sq_err += err * err;
      value_grad[i] = cfg.value_loss_weight * 2.0 * err * inv_m;
    }
  }
  return terms;
}

void write_metrics_header(std::ostream& out) {
  out << "epoch,mean_reward,entropy,value_loss,holdout_psnr\n";
}

void write_metrics_row(std::ostream& out, const EpochMetrics& m) {
  out << m.epoch << ',' << std::setprecision(10) << m.mean_reward << ',' << m.entropy << ','
      << m.value_loss << ',' << m.holdout_psnr << '\n';
}

HoldoutScore evaluate_denoiser(const PolicyValueNet& net, const std::vector<ImageGray>& clean,
                               const EpisodeConfig& episode, double sigma, int patch_size,
                               int patches, std::uint64_t seed) {
  if (clean.empty()) throw DataError("evaluate_denoiser: no images");
  if (patches < 1) throw ConfigError("evaluate_denoiser: need at least one patch");
  std::mt19937_64 rng(seed);
  HoldoutScore score;
  for (int p = 0; p < patches; ++p) {
    const ImageGray& img = clean[static_cast<std::size_t>(p) % clean.size()];
    const int size = std::min({patch_size, img.height(), img.width()});
    const ImageGray target = random_patch(img, PatchSpec{size, rng()});
    const ImageGray noisy = add_gaussian_noise(target, sigma, rng());
    score.noisy_psnr += psnr(target, noisy);
    score.denoised_psnr += psnr(target, denoise_greedy(net, noisy, episode));
  }
  score.noisy_psnr /= patches;
  score.denoised_psnr /= patches;
  return score;
}

std::vector<EpochMetrics> train(const std::vector<ImageGray>& trainset, PolicyValueNet& net,
                                const PPOConfig& cfg, const EpisodeConfig& episode, std::uint64_t seed,
                                const TrainHooks& hooks) {
  cfg.validate();
  episode.validate();
  if (trainset.empty()) throw DataError("training set is empty");
  if (net.architecture().num_actions != kNumActions) throw ConfigError("network action count mismatch");

  const std::vector<ImageGray>& holdout = hooks.holdout.empty()
                                              ? std::vector<ImageGray>{trainset.front()}
                                              : hooks.holdout;
  std::mt19937_64 rng(seed);
  const std::uint64_t holdout_seed = rng();
  std::uniform_int_distribution<std::size_t> pick_image(0, trainset.size() - 1);
  std::uniform_int_distribution<int> pick_dihedral(0, 7);
  Adam optimizer;
  GradientTape tape(net);
  std::vector<EpochMetrics> log;

  for (int epoch = 1; epoch <= cfg.total_epochs; ++epoch) {
    // Collection against a frozen snapshot.
    std::vector<ImageGray> clean_patches;
    std::vector<TrajectoryBatch> trajectories;
    double reward_sum = 0.0;
    std::size_t pixel_count = 0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const ImageGray& source = trainset[pick_image(rng)];
      ImageGray patch = random_patch(source, PatchSpec{cfg.patch_size, rng()});
      patch = augment_dihedral(patch, pick_dihedral(rng));
      const ImageGray noisy = add_gaussian_noise(patch, cfg.sigma_train, rng());
      TrajectoryBatch traj = denoise_sampled(net, noisy, patch, episode, rng());
      for (const PixelMap& r : traj.rewards) {
        for (double v : r) reward_sum += v;
      }
      pixel_count += patch.size();
      trajectories.push_back(std::move(traj));
      clean_patches.push_back(std::move(patch));
    }

    std::vector<std::vector<PixelMap>> returns(trajectories.size());
    std::vector<std::vector<PixelMap>> advantages(trajectories.size());
    for (std::size_t b = 0; b < trajectories.size(); ++b) {
      std::vector<PixelMap> scaled = trajectories[b].rewards;
      for (PixelMap& r : scaled) {
        for (double& v : r) v *= cfg.reward_scale;
      }
      returns[b] = rewards_to_go(scaled, cfg.gamma);
      for (int t = 0; t < episode.steps; ++t) {
        advantages[b].push_back(advantage(returns[b][t], trajectories[b].values[t]));
      }
    }
    const std::size_t minibatch =
        cfg.minibatch_size == 0 ? trajectories.size()
                                : std::min<std::size_t>(cfg.minibatch_size, trajectories.size());

    LossTerms first_pass;
    for (int pass = 0; pass < cfg.epochs_per_batch; ++pass) {
      for (std::size_t begin = 0; begin < trajectories.size(); begin += minibatch) {
        const std::size_t end = std::min(begin + minibatch, trajectories.size());
        double normalizer = 0.0;
        for (std::size_t b = begin; b < end; ++b) {
          normalizer += static_cast<double>(clean_patches[b].size()) * episode.steps;
        }
        tape.zero();
        LossTerms terms;
        for (std::size_t b = begin; b < end; ++b) {
          const TrajectoryBatch& traj = trajectories[b];
          for (int t = 0; t < episode.steps; ++t) {
            const ForwardResult fwd = forward(net, state_tensor(traj.states[t]));
            const std::size_t n = fwd.pixels();
            std::vector<double> logit_grad(fwd.policy.size());
            std::vector<double> value_grad(n);
            const PPOSample sample{traj.actions[t].actions, traj.old_log_probs[t], advantages[b][t],
                                   returns[b][t]};
            terms += ppo_loss_gradients(fwd.policy, fwd.log_policy, fwd.value, n, fwd.num_actions,
                                        sample, cfg, normalizer, logit_grad, value_grad);
            backward_from_logits(net, fwd, logit_grad, value_grad, tape);
          }
        }
        const double loss = -(terms.surrogate + cfg.entropy_coeff * terms.entropy) / normalizer +
                            cfg.value_loss_weight * terms.value_sq_err / normalizer;
        if (!std::isfinite(loss) || !tape.all_finite()) {
          throw NumericalFault("non-finite PPO loss at epoch " + std::to_string(epoch));
        }
        if (pass == 0) first_pass += terms;
        adam_step(net, tape, cfg.learning_rate, optimizer);
      }
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.mean_reward = reward_sum / static_cast<double>(pixel_count);
    m.entropy = first_pass.entropy / static_cast<double>(first_pass.count);
    m.value_loss = first_pass.value_sq_err / static_cast<double>(first_pass.count);
    m.holdout_psnr = evaluate_denoiser(net, holdout, episode, cfg.sigma_train, cfg.patch_size,
                                       hooks.holdout_patches, holdout_seed)
                         .denoised_psnr;
    log.push_back(m);
    if (hooks.on_epoch) hooks.on_epoch(m, net);

    if (m.entropy < 0.01 && epoch < cfg.total_epochs / 4) {
      throw NumericalFault("policy entropy collapsed to " + std::to_string(m.entropy) +
                           " nats at epoch " + std::to_string(epoch));
    }
  }
  return log;
}

}  // namespace repnp
