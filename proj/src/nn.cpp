#include "repnp/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <Eigen/Core>

#include "repnp/errors.hpp"

namespace repnp {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Unrolls every k x k dilated neighbourhood into a column so convolution
// becomes one GEMM. Row index = (c * k + ki) * k + kj, column = pixel.
void im2col(const Tensor& in, int k, int dilation, std::vector<double>& cols) {
  const int h = in.height;
  const int w = in.width;
  const int half = k / 2;
  const std::size_t hw = in.plane();
  cols.resize(static_cast<std::size_t>(in.channels) * k * k * hw);
  for (int c = 0; c < in.channels; ++c) {
    const double* src = in.channel(c);
    for (int ki = 0; ki < k; ++ki) {
      const int dr = (ki - half) * dilation;
      for (int kj = 0; kj < k; ++kj) {
        const int dc = (kj - half) * dilation;
        double* dst = cols.data() + (static_cast<std::size_t>((c * k + ki) * k + kj)) * hw;
        const int c0 = std::clamp(-dc, 0, w);
        const int c1 = std::clamp(w - dc, 0, w);
        for (int r = 0; r < h; ++r) {
          double* drow = dst + static_cast<std::size_t>(r) * w;
          const int sr = r + dr;
          if (sr < 0 || sr >= h || c0 >= c1) {
            std::fill(drow, drow + w, 0.0);
            continue;
          }
          std::fill(drow, drow + c0, 0.0);
          std::memcpy(drow + c0, src + static_cast<std::size_t>(sr) * w + c0 + dc,
                      sizeof(double) * static_cast<std::size_t>(c1 - c0));
          std::fill(drow + c1, drow + w, 0.0);
        }
      }
    }
  }
}

void col2im_accumulate(const std::vector<double>& cols, int k, int dilation, Tensor& out) {
  const int h = out.height;
  const int w = out.width;
  const int half = k / 2;
  const std::size_t hw = out.plane();
  for (int c = 0; c < out.channels; ++c) {
    double* dst = out.channel(c);
    for (int ki = 0; ki < k; ++ki) {
      const int dr = (ki - half) * dilation;
      for (int kj = 0; kj < k; ++kj) {
        const int dc = (kj - half) * dilation;
        const double* src = cols.data() + (static_cast<std::size_t>((c * k + ki) * k + kj)) * hw;
        const int c0 = std::clamp(-dc, 0, w);
        const int c1 = std::clamp(w - dc, 0, w);
        if (c0 >= c1) continue;
        for (int r = 0; r < h; ++r) {
          const int sr = r + dr;
          if (sr < 0 || sr >= h) continue;
          const double* srow = src + static_cast<std::size_t>(r) * w;
          double* drow = dst + static_cast<std::size_t>(sr) * w + dc;
          for (int col = c0; col < c1; ++col) drow[col] += srow[col];
        }
      }
    }
  }
}

void relu_inplace(Tensor& t) {
  for (double& v : t.data) v = v > 0.0 ? v : 0.0;
}

// Zeroes gradient entries where the ReLU output was not positive.
void relu_mask(Tensor& grad, const Tensor& activation) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    if (!(activation.data[i] > 0.0)) grad.data[i] = 0.0;
  }
}

void check_finite(const Tensor& t, std::size_t layer) {
  for (double v : t.data) {
    if (!std::isfinite(v)) {
      throw NumericalFault("non-finite activation in layer " + std::to_string(layer));
    }
  }
}

}  // namespace

ConvLayer::ConvLayer(int in, int out, int kernel, int dil)
    : in_channels(in), out_channels(out), kernel_size(kernel), dilation(dil) {
  if (in < 1 || out < 1 || kernel < 1 || kernel % 2 == 0 || dil < 1) {
    throw ConfigError("invalid conv layer shape");
  }
  weights.assign(static_cast<std::size_t>(out) * in * kernel * kernel, 0.0);
  bias.assign(static_cast<std::size_t>(out), 0.0);
}

Tensor conv_forward(const ConvLayer& layer, const Tensor& input) {
  if (input.channels != layer.in_channels) throw ShapeError("conv input channel mismatch");
  const int k = layer.kernel_size;
  const auto hw = static_cast<Eigen::Index>(input.plane());
  const Eigen::Index depth = static_cast<Eigen::Index>(layer.in_channels) * k * k;
  Tensor out(layer.out_channels, input.height, input.width);
  ConstMatrixMap w(layer.weights.data(), layer.out_channels, depth);
  MatrixMap y(out.data.data(), layer.out_channels, hw);
  if (k == 1) {
    y.noalias() = w * ConstMatrixMap(input.data.data(), depth, hw);
  } else {
    std::vector<double> cols;
    im2col(input, k, layer.dilation, cols);
    y.noalias() = w * ConstMatrixMap(cols.data(), depth, hw);
  }
  y.colwise() += Eigen::Map<const Eigen::VectorXd>(layer.bias.data(), layer.out_channels);
  return out;
}

Tensor conv_backward(const ConvLayer& layer, const Tensor& input, const Tensor& output_grad,
                     std::span<double> weight_grad, std::span<double> bias_grad,
                     bool need_input_grad) {
  if (output_grad.channels != layer.out_channels || output_grad.plane() != input.plane()) {
    throw ShapeError("conv output gradient shape mismatch");
  }
  const int k = layer.kernel_size;
  const auto hw = static_cast<Eigen::Index>(input.plane());
  const Eigen::Index depth = static_cast<Eigen::Index>(layer.in_channels) * k * k;
  ConstMatrixMap w(layer.weights.data(), layer.out_channels, depth);
  ConstMatrixMap dy(output_grad.data.data(), layer.out_channels, hw);
  MatrixMap dw(weight_grad.data(), layer.out_channels, depth);
  // Plain loop: Eigen's vectorised reductions round differently depending on
  // buffer alignment, which would make training results allocation-dependent.
  for (int o = 0; o < layer.out_channels; ++o) {
    const double* row = output_grad.channel(o);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < hw; ++i) acc += row[i];
    bias_grad[static_cast<std::size_t>(o)] += acc;
  }

  if (k == 1) {
    dw.noalias() += dy * ConstMatrixMap(input.data.data(), depth, hw).transpose();
    if (!need_input_grad) return {};
    Tensor dx(input.channels, input.height, input.width);
    MatrixMap(dx.data.data(), depth, hw).noalias() = w.transpose() * dy;
    return dx;
  }
  std::vector<double> cols;
  im2col(input, k, layer.dilation, cols);
  dw.noalias() += dy * ConstMatrixMap(cols.data(), depth, hw).transpose();
  if (!need_input_grad) return {};
  MatrixMap(cols.data(), depth, hw).noalias() = w.transpose() * dy;
  Tensor dx(input.channels, input.height, input.width);
  col2im_accumulate(cols, k, layer.dilation, dx);
  return dx;
}

// ---------------------------------------------------------------------------

NetArchitecture production_architecture() { return NetArchitecture{}; }

PolicyValueNet::PolicyValueNet(NetArchitecture arch, std::uint64_t seed) : arch_(std::move(arch)) {
  if (arch_.width < 1 || arch_.num_actions < 2 || arch_.encoder_dilations.empty()) {
    throw ConfigError("invalid network architecture");
  }
  int channels = 1;
  for (int d : arch_.encoder_dilations) {
    layers_.emplace_back(channels, arch_.width, 3, d);
    channels = arch_.width;
  }
  layers_.emplace_back(arch_.width, arch_.width, 3, 1);
  layers_.emplace_back(arch_.width, arch_.num_actions, 1, 1);
  layers_.emplace_back(arch_.width, arch_.width, 3, 1);
  layers_.emplace_back(arch_.width, 1, 1, 1);

  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    ConvLayer& layer = layers_[l];
    if (l == policy_begin() + 1) continue;  // zero-initialised logits layer
    const double fan_in =
        static_cast<double>(layer.in_channels) * layer.kernel_size * layer.kernel_size;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (double& w : layer.weights) w = dist(rng);
  }
}

PolicyValueNet PolicyValueNet::from_layers(NetArchitecture arch, std::vector<ConvLayer> layers) {
  PolicyValueNet reference(arch, 0);
  if (layers.size() != reference.layers_.size()) {
    throw DataError("layer count does not match architecture");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const ConvLayer& want = reference.layers_[l];
    const ConvLayer& got = layers[l];
    if (got.in_channels != want.in_channels || got.out_channels != want.out_channels ||
        got.kernel_size != want.kernel_size || got.dilation != want.dilation ||
        got.weights.size() != want.weights.size() || got.bias.size() != want.bias.size()) {
      throw DataError("layer " + std::to_string(l) + " does not match architecture");
    }
  }
  reference.layers_ = std::move(layers);
  return reference;
}

std::size_t PolicyValueNet::parameter_count() const {
  std::size_t total = 0;
  for (const ConvLayer& l : layers_) total += l.parameter_count();
  return total;
}

std::vector<std::span<double>> PolicyValueNet::parameter_blocks() {
  std::vector<std::span<double>> blocks;
  for (ConvLayer& l : layers_) {
    blocks.emplace_back(l.weights);
    blocks.emplace_back(l.bias);
  }
  return blocks;
}

// ---------------------------------------------------------------------------

ForwardResult forward(const PolicyValueNet& net, const Tensor& state, Heads heads, bool keep_cache) {
  if (state.channels != 1) throw ShapeError("network state must have one channel");
  const auto& layers = net.layers();
  const std::size_t enc = net.encoder_layers();
  const std::size_t pol = net.policy_begin();
  const std::size_t val = net.value_begin();

  ForwardResult res;
  res.height = state.height;
  res.width = state.width;
  res.num_actions = net.architecture().num_actions;
  ForwardCache& cache = res.cache;
  cache.inputs.resize(layers.size());
  cache.has_value = heads == Heads::PolicyAndValue;

  Tensor h = state;
  for (std::size_t l = 0; l < enc; ++l) {
    Tensor next = conv_forward(layers[l], h);
    relu_inplace(next);
    check_finite(next, l);
    if (keep_cache) cache.inputs[l] = std::move(h);
    h = std::move(next);
  }

  Tensor p = conv_forward(layers[pol], h);
  relu_inplace(p);
  check_finite(p, pol);
  Tensor logits = conv_forward(layers[pol + 1], p);
  check_finite(logits, pol + 1);

  if (cache.has_value) {
    Tensor v = conv_forward(layers[val], h);
    relu_inplace(v);
    check_finite(v, val);
    Tensor value = conv_forward(layers[val + 1], v);
    check_finite(value, val + 1);
    res.value = std::move(value.data);
    if (keep_cache) {
      cache.inputs[val] = h;
      cache.inputs[val + 1] = std::move(v);
    }
  }
  if (keep_cache) {
    cache.inputs[pol] = std::move(h);
    cache.inputs[pol + 1] = std::move(p);
  } else {
    cache.inputs.clear();
  }

  // Per-pixel log-softmax over the action channels.
  const std::size_t n = res.pixels();
  const int actions = res.num_actions;
  res.policy.resize(static_cast<std::size_t>(actions) * n);
  res.log_policy.resize(res.policy.size());
  for (std::size_t i = 0; i < n; ++i) {
    double peak = logits.data[i];
    for (int a = 1; a < actions; ++a) peak = std::max(peak, logits.data[a * n + i]);
    double sum = 0.0;
    for (int a = 0; a < actions; ++a) sum += std::exp(logits.data[a * n + i] - peak);
    const double log_norm = peak + std::log(sum);
    for (int a = 0; a < actions; ++a) {
      const double lp = logits.data[a * n + i] - log_norm;
      res.log_policy[a * n + i] = lp;
      res.policy[a * n + i] = std::exp(lp);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------

GradientTape::GradientTape(const PolicyValueNet& net) {
  for (const ConvLayer& l : net.layers()) {
    weight_grads_.emplace_back(l.weights.size(), 0.0);
    bias_grads_.emplace_back(l.bias.size(), 0.0);
  }
}

std::vector<std::span<const double>> GradientTape::blocks() const {
  std::vector<std::span<const double>> out;
  for (std::size_t l = 0; l < weight_grads_.size(); ++l) {
    out.emplace_back(weight_grads_[l]);
    out.emplace_back(bias_grads_[l]);
  }
  return out;
}

void GradientTape::zero() {
  for (auto& g : weight_grads_) std::fill(g.begin(), g.end(), 0.0);
  for (auto& g : bias_grads_) std::fill(g.begin(), g.end(), 0.0);
}

void GradientTape::scale(double factor) {
  for (auto& g : weight_grads_) for (double& v : g) v *= factor;
  for (auto& g : bias_grads_) for (double& v : g) v *= factor;
}

GradientTape& GradientTape::operator+=(const GradientTape& other) {
  if (other.weight_grads_.size() != weight_grads_.size()) throw ShapeError("tape layout mismatch");
  for (std::size_t l = 0; l < weight_grads_.size(); ++l) {
    if (other.weight_grads_[l].size() != weight_grads_[l].size() ||
        other.bias_grads_[l].size() != bias_grads_[l].size()) {
      throw ShapeError("tape layout mismatch");
    }
    for (std::size_t i = 0; i < weight_grads_[l].size(); ++i) weight_grads_[l][i] += other.weight_grads_[l][i];
    for (std::size_t i = 0; i < bias_grads_[l].size(); ++i) bias_grads_[l][i] += other.bias_grads_[l][i];
  }
  return *this;
}

bool GradientTape::all_finite() const {
  for (const auto& g : weight_grads_) {
    for (double v : g) if (!std::isfinite(v)) return false;
  }
  for (const auto& g : bias_grads_) {
    for (double v : g) if (!std::isfinite(v)) return false;
  }
  return true;
}

void backward_from_logits(const PolicyValueNet& net, const ForwardResult& fwd,
                          std::span<const double> logit_grad, std::span<const double> value_grad,
                          GradientTape& tape) {
  const auto& layers = net.layers();
  const auto& in = fwd.cache.inputs;
  if (in.size() != layers.size() || in[net.policy_begin()].data.empty()) {
    throw ShapeError("forward cache does not belong to this network");
  }
  if (tape.weight_grads().size() != layers.size()) throw ShapeError("tape layout mismatch");
  const std::size_t n = fwd.pixels();
  const std::size_t pol = net.policy_begin();
  const std::size_t val = net.value_begin();
  if (logit_grad.size() != static_cast<std::size_t>(fwd.num_actions) * n) {
    throw ShapeError("policy gradient is not congruent with the policy output");
  }
  const bool use_value = !value_grad.empty();
  if (use_value && (!fwd.cache.has_value || value_grad.size() != n)) {
    throw ShapeError("value gradient is not congruent with the value output");
  }

  auto backprop = [&](std::size_t l, const Tensor& grad, bool need_input) {
    return conv_backward(layers[l], in[l], grad, tape.weight_grads()[l], tape.bias_grads()[l],
                         need_input);
  };

  Tensor dlogits(fwd.num_actions, fwd.height, fwd.width);
  std::copy(logit_grad.begin(), logit_grad.end(), dlogits.data.begin());
  Tensor dp = backprop(pol + 1, dlogits, true);
  relu_mask(dp, in[pol + 1]);
  Tensor dh = backprop(pol, dp, true);

  if (use_value) {
    Tensor dvalue(1, fwd.height, fwd.width);
    std::copy(value_grad.begin(), value_grad.end(), dvalue.data.begin());
    Tensor dv = backprop(val + 1, dvalue, true);
    relu_mask(dv, in[val + 1]);
    Tensor dh_value = backprop(val, dv, true);
    for (std::size_t i = 0; i < dh.data.size(); ++i) dh.data[i] += dh_value.data[i];
  }

  for (std::size_t l = net.encoder_layers(); l-- > 0;) {
    // Output of encoder layer l is the input of its successor.
    relu_mask(dh, in[l + 1]);
    dh = backprop(l, dh, l > 0);
  }
}

void backward(const PolicyValueNet& net, const ForwardResult& fwd,
              std::span<const double> policy_grad, std::span<const double> value_grad,
              GradientTape& tape) {
  const std::size_t n = fwd.pixels();
  const int actions = fwd.num_actions;
  if (policy_grad.size() != static_cast<std::size_t>(actions) * n) {
    throw ShapeError("policy gradient is not congruent with the policy output");
  }
  // Softmax Jacobian-vector product: dz_j = p_j (g_j - sum_k p_k g_k).
  std::vector<double> logit_grad(policy_grad.size());
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (int a = 0; a < actions; ++a) dot += fwd.policy[a * n + i] * policy_grad[a * n + i];
    for (int a = 0; a < actions; ++a) {
      logit_grad[a * n + i] = fwd.policy[a * n + i] * (policy_grad[a * n + i] - dot);
    }
  }
  backward_from_logits(net, fwd, logit_grad, value_grad, tape);
}

// ---------------------------------------------------------------------------

Adam::Adam(double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void Adam::step(std::span<const std::span<double>> params,
                std::span<const std::span<const double>> grads, double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (params.size() != grads.size()) throw ShapeError("parameter/gradient block count mismatch");
  for (const auto& g : grads) {
    for (double v : g) {
      if (!std::isfinite(v)) throw NumericalFault("non-finite gradient rejected by Adam");
    }
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ShapeError("parameter layout changed between Adam steps");
  ++step_count_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size() || m_[b].size() != params[b].size()) {
      throw ShapeError("parameter/gradient block size mismatch");
    }
    auto& m = m_[b];
    auto& v = v_[b];
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double g = grads[b][i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      params[b][i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon_);
    }
  }
}

void adam_step(PolicyValueNet& net, const GradientTape& tape, double lr, Adam& optimizer) {
  const auto params = net.parameter_blocks();
  const auto grads = tape.blocks();
  optimizer.step(params, grads, lr);
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'R', 'E', 'P', 'N', 'P', 'N', 'E', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

void write_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw DataError("truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw DataError("truncated checkpoint");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const PolicyValueNet& net, const std::filesystem::path& path,
                     const nlohmann::json& metadata) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const NetArchitecture& arch = net.architecture();
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kFormatVersion);
  write_u32(out, static_cast<std::uint32_t>(arch.width));
  write_u32(out, static_cast<std::uint32_t>(arch.num_actions));
  write_u32(out, static_cast<std::uint32_t>(arch.encoder_dilations.size()));
  for (int d : arch.encoder_dilations) write_u32(out, static_cast<std::uint32_t>(d));
  write_u32(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const ConvLayer& l : net.layers()) {
    write_u32(out, static_cast<std::uint32_t>(l.in_channels));
    write_u32(out, static_cast<std::uint32_t>(l.out_channels));
    write_u32(out, static_cast<std::uint32_t>(l.kernel_size));
    write_u32(out, static_cast<std::uint32_t>(l.dilation));
    for (double w : l.weights) write_f64(out, w);
    for (double b : l.bias) write_f64(out, b);
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());

  nlohmann::json sidecar = metadata;
  sidecar["format_version"] = kFormatVersion;
  sidecar["architecture"] = {{"width", arch.width},
                             {"num_actions", arch.num_actions},
                             {"encoder_dilations", arch.encoder_dilations}};
  sidecar["parameter_count"] = net.parameter_count();
  std::ofstream meta(path.string() + ".json");
  if (!meta) throw DataError("cannot write checkpoint metadata for " + path.string());
  meta << sidecar.dump(2) << "\n";
}

PolicyValueNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw DataError(path.string() + ": not a network checkpoint");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kFormatVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  NetArchitecture arch;
  arch.width = static_cast<int>(read_u32(in));
  arch.num_actions = static_cast<int>(read_u32(in));
  const std::uint32_t n_dil = read_u32(in);
  if (n_dil == 0 || n_dil > 64 || arch.width < 1 || arch.width > 4096 || arch.num_actions < 2 ||
      arch.num_actions > 4096) {
    throw DataError(path.string() + ": implausible architecture descriptor");
  }
  arch.encoder_dilations.clear();
  for (std::uint32_t i = 0; i < n_dil; ++i) arch.encoder_dilations.push_back(static_cast<int>(read_u32(in)));

  const std::uint32_t n_layers = read_u32(in);
  if (n_layers != n_dil + 4) throw DataError(path.string() + ": layer count does not match architecture");
  std::vector<ConvLayer> layers;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    ConvLayer layer;
    layer.in_channels = static_cast<int>(read_u32(in));
    layer.out_channels = static_cast<int>(read_u32(in));
    layer.kernel_size = static_cast<int>(read_u32(in));
    layer.dilation = static_cast<int>(read_u32(in));
    if (layer.in_channels < 1 || layer.in_channels > 4096 || layer.out_channels < 1 ||
        layer.out_channels > 4096 || layer.kernel_size < 1 || layer.kernel_size > 15) {
      throw DataError(path.string() + ": implausible layer header");
    }
    layer.weights.resize(static_cast<std::size_t>(layer.out_channels) * layer.in_channels *
                         layer.kernel_size * layer.kernel_size);
    layer.bias.resize(static_cast<std::size_t>(layer.out_channels));
    for (double& w : layer.weights) w = read_f64(in);
    for (double& b : layer.bias) b = read_f64(in);
    layers.push_back(std::move(layer));
  }
  return PolicyValueNet::from_layers(std::move(arch), std::move(layers));
}

}  // namespace repnp
