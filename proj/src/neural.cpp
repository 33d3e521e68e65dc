#include "pidrl/neural.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "pidrl/random.hpp"

namespace pidrl {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
  }
  return "linear";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

namespace {

double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::linear: return x;
  }
  return x;
}

// Derivative expressed through the pre-activation and the output.
double activate_grad(Activation a, double pre, double out) {
  switch (a) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - out * out;
    case Activation::linear: return 1.0;
  }
  return 1.0;
}

}  // namespace

Mlp::Mlp(std::vector<LayerShape> shapes) : shapes_(std::move(shapes)) {
  if (shapes_.empty()) throw std::invalid_argument("network needs at least one layer");
  std::size_t total = 0;
  for (std::size_t l = 0; l < shapes_.size(); ++l) {
    const auto& s = shapes_[l];
    if (s.in == 0 || s.out == 0) throw std::invalid_argument("layer widths must be positive");
    if (s.passthrough >= s.in) throw std::invalid_argument("layernorm needs at least one normalized input");
    if (l > 0 && shapes_[l - 1].out != s.in)
      throw std::invalid_argument("layer dimensions do not chain");
    offsets_.push_back(total);
    total += 2 * s.in + s.in * s.out + s.out;
  }
  params_.assign(total, 0.0);
  for (std::size_t l = 0; l < shapes_.size(); ++l) {
    for (std::size_t i = 0; i < shapes_[l].in; ++i) params_[ln_gain_offset(l) + i] = 1.0;
  }
}

Mlp Mlp::build(const std::vector<std::size_t>& widths, Activation hidden, Activation output) {
  if (widths.size() < 2) throw std::invalid_argument("need input and output widths");
  std::vector<LayerShape> shapes;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const bool last = l + 2 == widths.size();
    shapes.push_back({widths[l], widths[l + 1], last ? output : hidden});
  }
  return Mlp(std::move(shapes));
}

void Mlp::initialize(std::mt19937_64& rng) {
  for (std::size_t l = 0; l < shapes_.size(); ++l) {
    const auto& s = shapes_[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
    for (std::size_t i = 0; i < s.in; ++i) {
      params_[ln_gain_offset(l) + i] = 1.0;
      params_[ln_bias_offset(l) + i] = 0.0;
    }
    for (std::size_t i = 0; i < s.in * s.out; ++i)
      params_[weight_offset(l) + i] = uniform(rng, -bound, bound);
    for (std::size_t i = 0; i < s.out; ++i) params_[bias_offset(l) + i] = uniform(rng, -bound, bound);
  }
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  ForwardCache scratch;
  return forward(x, scratch);
}

std::vector<double> Mlp::forward(std::span<const double> x, ForwardCache& cache) const {
  if (shapes_.empty()) throw std::logic_error("forward on an empty network");
  if (x.size() != input_dim()) throw std::invalid_argument("network input dimension mismatch");
  cache.layers.resize(shapes_.size());
  std::vector<double> current(x.begin(), x.end());
  for (std::size_t l = 0; l < shapes_.size(); ++l) {
    const auto& s = shapes_[l];
    LayerCache& c = cache.layers[l];
    c.input = current;

    const std::size_t n = s.in - s.passthrough;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += current[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (current[i] - mean) * (current[i] - mean);
    var /= static_cast<double>(n);
    c.inv_std = 1.0 / std::sqrt(var + kLayerNormEps);

    c.normalized.resize(s.in);
    std::vector<double> z(s.in);
    const double* gain = &params_[ln_gain_offset(l)];
    const double* shift = &params_[ln_bias_offset(l)];
    for (std::size_t i = 0; i < s.in; ++i) {
      c.normalized[i] = i < n ? (current[i] - mean) * c.inv_std : current[i];
      z[i] = gain[i] * c.normalized[i] + shift[i];
    }

    const double* w = &params_[weight_offset(l)];
    const double* b = &params_[bias_offset(l)];
    c.pre_activation.resize(s.out);
    c.output.resize(s.out);
    for (std::size_t o = 0; o < s.out; ++o) {
      double acc = b[o];
      const double* row = w + o * s.in;
      for (std::size_t i = 0; i < s.in; ++i) acc += row[i] * z[i];
      c.pre_activation[o] = acc;
      c.output[o] = activate(s.activation, acc);
    }
    current = c.output;
  }
  return current;
}

void Mlp::backward(const ForwardCache& cache, std::span<const double> upstream,
                   Gradients& grads) const {
  if (cache.layers.size() != shapes_.size())
    throw std::logic_error("backward called without a matching forward cache");
  if (upstream.size() != output_dim()) throw std::invalid_argument("upstream gradient size mismatch");
  if (grads.params.empty()) grads.params.assign(params_.size(), 0.0);
  if (grads.params.size() != params_.size()) throw std::invalid_argument("gradient buffer size mismatch");

  std::vector<double> d_out(upstream.begin(), upstream.end());
  for (std::size_t l = shapes_.size(); l-- > 0;) {
    const auto& s = shapes_[l];
    const LayerCache& c = cache.layers[l];
    const double* gain = &params_[ln_gain_offset(l)];
    const double* shift = &params_[ln_bias_offset(l)];
    const double* w = &params_[weight_offset(l)];
    double* g_gain = &grads.params[ln_gain_offset(l)];
    double* g_shift = &grads.params[ln_bias_offset(l)];
    double* g_w = &grads.params[weight_offset(l)];
    double* g_b = &grads.params[bias_offset(l)];

    std::vector<double> d_pre(s.out);
    for (std::size_t o = 0; o < s.out; ++o)
      d_pre[o] = d_out[o] * activate_grad(s.activation, c.pre_activation[o], c.output[o]);

    std::vector<double> d_z(s.in, 0.0);
    for (std::size_t o = 0; o < s.out; ++o) {
      g_b[o] += d_pre[o];
      const double* row = w + o * s.in;
      double* g_row = g_w + o * s.in;
      for (std::size_t i = 0; i < s.in; ++i) {
        const double z = gain[i] * c.normalized[i] + shift[i];
        g_row[i] += d_pre[o] * z;
        d_z[i] += row[i] * d_pre[o];
      }
    }

    // Layernorm: dx = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat)).
    const std::size_t n = s.in - s.passthrough;
    std::vector<double> d_hat(s.in);
    double mean_d = 0.0;
    double mean_dx = 0.0;
    for (std::size_t i = 0; i < s.in; ++i) {
      g_gain[i] += d_z[i] * c.normalized[i];
      g_shift[i] += d_z[i];
      d_hat[i] = d_z[i] * gain[i];
      if (i < n) {
        mean_d += d_hat[i];
        mean_dx += d_hat[i] * c.normalized[i];
      }
    }
    mean_d /= static_cast<double>(n);
    mean_dx /= static_cast<double>(n);
    std::vector<double> d_in(s.in);
    for (std::size_t i = 0; i < s.in; ++i)
      d_in[i] = i < n ? c.inv_std * (d_hat[i] - mean_d - c.normalized[i] * mean_dx) : d_hat[i];
    d_out = std::move(d_in);
  }
  grads.input = std::move(d_out);
}

bool Mlp::operator==(const Mlp& other) const {
  if (shapes_.size() != other.shapes_.size()) return false;
  for (std::size_t l = 0; l < shapes_.size(); ++l) {
    const auto& a = shapes_[l];
    const auto& b = other.shapes_[l];
    if (a.in != b.in || a.out != b.out || a.activation != b.activation || a.passthrough != b.passthrough)
      return false;
  }
  return params_ == other.params_;
}

void write_doubles(std::ostream& os, std::span<const double> values) {
  char buf[64];
  for (double v : values) {
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
    os.write(buf, res.ptr - buf);
    os.put('\n');
  }
}

std::vector<double> read_doubles(std::istream& is, std::size_t count) {
  std::vector<double> out(count);
  std::string token;
  for (std::size_t i = 0; i < count; ++i) {
    if (!(is >> token)) throw std::runtime_error("checkpoint truncated");
    const char* first = token.data();
    const char* last = first + token.size();
    bool negative = false;
    if (first != last && *first == '-') {
      negative = true;
      ++first;
    }
    double v = 0.0;
    auto res = std::from_chars(first, last, v, std::chars_format::hex);
    if (res.ec != std::errc() || res.ptr != last)
      throw std::runtime_error("bad number in checkpoint: " + token);
    out[i] = negative ? -v : v;
  }
  return out;
}

void Mlp::save(std::ostream& os) const {
  os << "mlp " << shapes_.size() << '\n';
  for (const auto& s : shapes_)
    os << "layer " << s.in << ' ' << s.out << ' ' << to_string(s.activation) << ' ' << s.passthrough << '\n';
  os << "params " << params_.size() << '\n';
  write_doubles(os, params_);
}

Mlp Mlp::load(std::istream& is) {
  std::string tag;
  std::size_t layers = 0;
  if (!(is >> tag >> layers) || tag != "mlp") throw std::runtime_error("expected 'mlp' header");
  std::vector<LayerShape> shapes(layers);
  for (auto& s : shapes) {
    std::string act;
    if (!(is >> tag >> s.in >> s.out >> act >> s.passthrough) || tag != "layer")
      throw std::runtime_error("expected 'layer' record");
    s.activation = parse_activation(act);
  }
  Mlp net(std::move(shapes));
  std::size_t count = 0;
  if (!(is >> tag >> count) || tag != "params") throw std::runtime_error("expected 'params' record");
  if (count != net.params_.size()) throw std::runtime_error("parameter count does not match shapes");
  net.params_ = read_doubles(is, count);
  return net;
}

AdamOptimizer::AdamOptimizer(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw std::invalid_argument("optimizer shape mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
  }
}

void AdamOptimizer::save(std::ostream& os) const {
  os << "adam " << m_.size() << ' ' << t_ << '\n';
  write_doubles(os, std::span<const double>(&cfg_.lr, 1));
  write_doubles(os, std::span<const double>(&cfg_.beta1, 1));
  write_doubles(os, std::span<const double>(&cfg_.beta2, 1));
  write_doubles(os, std::span<const double>(&cfg_.eps, 1));
  write_doubles(os, m_);
  write_doubles(os, v_);
}

AdamOptimizer AdamOptimizer::load(std::istream& is) {
  std::string tag;
  std::size_t n = 0;
  std::size_t t = 0;
  if (!(is >> tag >> n >> t) || tag != "adam") throw std::runtime_error("expected 'adam' header");
  const auto hyper = read_doubles(is, 4);
  AdamOptimizer opt(n, AdamConfig{hyper[0], hyper[1], hyper[2], hyper[3]});
  opt.t_ = t;
  opt.m_ = read_doubles(is, n);
  opt.v_ = read_doubles(is, n);
  return opt;
}

void polyak_update(std::span<double> target, std::span<const double> online, double rho) {
  if (target.size() != online.size()) throw std::invalid_argument("polyak shape mismatch");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("polyak rho must lie in (0, 1)");
  for (std::size_t i = 0; i < target.size(); ++i)
    target[i] = rho * target[i] + (1.0 - rho) * online[i];
}

}  // namespace pidrl
