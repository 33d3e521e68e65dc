#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pidrl {

enum class Activation { relu, tanh, linear };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

/// Shape of one layer: layernorm over `in` features, then an affine map to `out`.
struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::linear;
  // Trailing inputs that skip the normalization statistics (copied through,
  // still scaled by their gain and shifted by their bias).
  std::size_t passthrough = 0;
};

struct LayerCache {
  std::vector<double> input;
  std::vector<double> normalized;  // (x - mean) / sqrt(var + eps)
  double inv_std = 0.0;
  std::vector<double> pre_activation;
  std::vector<double> output;
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  bool empty() const { return layers.empty(); }
};

struct Gradients {
  std::vector<double> params;  // same layout as Mlp::params()
  std::vector<double> input;
};

/// Small feed-forward network. Every layer normalizes its input (layernorm with
/// learnable gain/bias) before the affine map and activation. All parameters
/// live in one flat buffer; per layer the layout is
///   [ln_gain(in), ln_bias(in), W(out x in, row-major), b(out)].
class Mlp {
 public:
  static constexpr double kLayerNormEps = 1e-5;

  Mlp() = default;
  explicit Mlp(std::vector<LayerShape> shapes);

  /// widths = {input, hidden..., output}; hidden layers use `hidden`, the last `output`.
  static Mlp build(const std::vector<std::size_t>& widths, Activation hidden, Activation output);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases; layernorm gain 1, bias 0.
  void initialize(std::mt19937_64& rng);

  std::vector<double> forward(std::span<const double> x) const;
  std::vector<double> forward(std::span<const double> x, ForwardCache& cache) const;

  /// Reverse pass for one sample. Parameter gradients are added into
  /// grads.params (sized on first use); grads.input is overwritten.
  void backward(const ForwardCache& cache, std::span<const double> upstream, Gradients& grads) const;

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }
  const std::vector<LayerShape>& shapes() const { return shapes_; }
  std::size_t input_dim() const { return shapes_.empty() ? 0 : shapes_.front().in; }
  std::size_t output_dim() const { return shapes_.empty() ? 0 : shapes_.back().out; }

  // Offsets into params() for layer `l`.
  std::size_t ln_gain_offset(std::size_t l) const { return offsets_[l]; }
  std::size_t ln_bias_offset(std::size_t l) const { return offsets_[l] + shapes_[l].in; }
  std::size_t weight_offset(std::size_t l) const { return offsets_[l] + 2 * shapes_[l].in; }
  std::size_t bias_offset(std::size_t l) const {
    return weight_offset(l) + shapes_[l].in * shapes_[l].out;
  }

  void save(std::ostream& os) const;
  static Mlp load(std::istream& is);

  bool operator==(const Mlp& other) const;

 private:
  std::vector<LayerShape> shapes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct AdamConfig {
  double lr = 0.0002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(std::size_t n, AdamConfig cfg = {});

  void step(std::span<double> params, std::span<const double> grads);

  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

  void save(std::ostream& os) const;
  static AdamOptimizer load(std::istream& is);

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// target <- rho * target + (1 - rho) * online, element-wise.
void polyak_update(std::span<double> target, std::span<const double> online, double rho);

// Bit-exact text encoding of doubles (hexfloat).
void write_doubles(std::ostream& os, std::span<const double> values);
std::vector<double> read_doubles(std::istream& is, std::size_t count);

}  // namespace pidrl
