#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace repnp {

/// Channel-major (C x H x W) activation map.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w),
             fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  double* channel(int c) { return data.data() + static_cast<std::size_t>(c) * plane(); }
  const double* channel(int c) const { return data.data() + static_cast<std::size_t>(c) * plane(); }
};

/// 2-D convolution with zero "same" padding: output spatial dims equal input
/// dims. Weights are laid out (out, in, k, k).
struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kernel_size = 1;
  int dilation = 1;
  std::vector<double> weights;
  std::vector<double> bias;

  ConvLayer() = default;
  ConvLayer(int in, int out, int kernel, int dil);

  std::size_t parameter_count() const { return weights.size() + bias.size(); }
};

Tensor conv_forward(const ConvLayer& layer, const Tensor& input);

/// Accumulates dL/dW and dL/db into `weight_grad` / `bias_grad` and returns
/// dL/dinput (skipped, returning an empty tensor, when `need_input_grad` is
/// false).
Tensor conv_backward(const ConvLayer& layer, const Tensor& input, const Tensor& output_grad,
                     std::span<double> weight_grad, std::span<double> bias_grad,
                     bool need_input_grad = true);

struct NetArchitecture {
  int width = 96;
  std::vector<int> encoder_dilations{1, 2, 3, 4};
  int num_actions = 27;

  bool operator==(const NetArchitecture&) const = default;
};

/// Shared-encoder fully convolutional network. Encoder: 3x3 dilated convs
/// with ReLU. Policy head: 3x3 conv + ReLU, 1x1 conv to num_actions logits,
/// per-pixel softmax. Value head: 3x3 conv + ReLU, 1x1 conv to one channel.
class PolicyValueNet {
 public:
  PolicyValueNet() = default;
  /// He fan-in initialisation; the final policy layer starts at zero so the
  /// initial policy is uniform.
  PolicyValueNet(NetArchitecture arch, std::uint64_t seed);

  const NetArchitecture& architecture() const { return arch_; }
  std::vector<ConvLayer>& layers() { return layers_; }
  const std::vector<ConvLayer>& layers() const { return layers_; }

  std::size_t encoder_layers() const { return arch_.encoder_dilations.size(); }
  std::size_t policy_begin() const { return encoder_layers(); }
  std::size_t value_begin() const { return encoder_layers() + 2; }

  std::size_t parameter_count() const;

  /// Weight then bias block of every layer in declaration order.
  std::vector<std::span<double>> parameter_blocks();

  /// Rebuilds an architecture from its layers; used by checkpoint loading.
  static PolicyValueNet from_layers(NetArchitecture arch, std::vector<ConvLayer> layers);

 private:
  NetArchitecture arch_;
  std::vector<ConvLayer> layers_;
};

/// Network sized to roughly 0.42M parameters.
NetArchitecture production_architecture();

/// Layer inputs retained for the backward pass. ReLU masks are recovered
/// from the input of the successor layer.
struct ForwardCache {
  std::vector<Tensor> inputs;  // inputs[l] is the input of layers()[l]
  bool has_value = false;
};

struct ForwardResult {
  int height = 0;
  int width = 0;
  int num_actions = 0;
  /// Action-major: probability of action a at pixel i is policy[a * H * W + i].
  std::vector<double> policy;
  std::vector<double> log_policy;
  /// Per-pixel value estimate; empty when the value head was skipped.
  std::vector<double> value;
  ForwardCache cache;

  std::size_t pixels() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  double prob(int action, std::size_t pixel) const {
    return policy[static_cast<std::size_t>(action) * pixels() + pixel];
  }
};

enum class Heads { PolicyOnly, PolicyAndValue };

/// Forward pass on a single-channel state already scaled to [0, 1]. Throws
/// NumericalFault naming the layer index if any activation is non-finite.
ForwardResult forward(const PolicyValueNet& net, const Tensor& state,
                      Heads heads = Heads::PolicyAndValue, bool keep_cache = true);

/// Per-layer gradient arrays congruent with a PolicyValueNet.
class GradientTape {
 public:
  GradientTape() = default;
  explicit GradientTape(const PolicyValueNet& net);

  std::vector<std::vector<double>>& weight_grads() { return weight_grads_; }
  std::vector<std::vector<double>>& bias_grads() { return bias_grads_; }
  const std::vector<std::vector<double>>& weight_grads() const { return weight_grads_; }
  const std::vector<std::vector<double>>& bias_grads() const { return bias_grads_; }

  std::vector<std::span<const double>> blocks() const;
  void zero();
  void scale(double factor);
  GradientTape& operator+=(const GradientTape& other);
  bool all_finite() const;

 private:
  std::vector<std::vector<double>> weight_grads_;
  std::vector<std::vector<double>> bias_grads_;
};

/// Reverse pass. `policy_grad` is dL/d(probabilities) in the action-major
/// layout of ForwardResult::policy; `value_grad` is dL/d(value) per pixel
/// (may be empty when the value head was not evaluated). Gradients are
/// accumulated into `tape`.
void backward(const PolicyValueNet& net, const ForwardResult& fwd,
              std::span<const double> policy_grad, std::span<const double> value_grad,
              GradientTape& tape);

/// Same as backward() but takes dL/d(logits) directly, which avoids the
/// softmax Jacobian and is numerically safer near deterministic policies.
void backward_from_logits(const PolicyValueNet& net, const ForwardResult& fwd,
                          std::span<const double> logit_grad, std::span<const double> value_grad,
                          GradientTape& tape);

/// Adam with bias correction. Moments persist across calls and are keyed to
/// the block layout seen on the first step.
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  void step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
            double lr);

  std::int64_t step_count() const { return step_count_; }

 private:
  double beta1_;
  double beta2_;
  double epsilon_;
  std::int64_t step_count_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Applies one Adam update to every parameter of `net`. Throws
/// NumericalFault if the tape holds non-finite values.
void adam_step(PolicyValueNet& net, const GradientTape& tape, double lr, Adam& optimizer);

/// Binary checkpoint: "REPNPNET" magic, format version, architecture
/// descriptor, then per layer its shape header followed by weights and bias
/// as little-endian IEEE-754 doubles. Metadata goes to `<path>.json`.
void save_checkpoint(const PolicyValueNet& net, const std::filesystem::path& path,
                     const nlohmann::json& metadata = nlohmann::json::object());
PolicyValueNet load_checkpoint(const std::filesystem::path& path);

}  // namespace repnp
