#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wcc/corpus.hpp"
#include "wcc/error.hpp"
#include "wcc/model.hpp"
#include "wcc/random.hpp"

namespace wcc {

// Generator topologies. aSGN: Y from Z only. caSGN1: Y from (f(x), Z), Z
// standard normal. caSGN2: Z ~ N(mu_x, sigma_x^2), Y from Z. caSGN3: Z as in
// caSGN2, Y from (f(x), Z). ACE: Y from f(x), no latent.
enum class Topology { ASGN, CASGN1, CASGN2, CASGN3, ACE };

inline constexpr std::array<std::string_view, 5> kTopologyNames = {"asgn", "casgn1", "casgn2", "casgn3", "ace"};

inline std::string_view to_string(Topology t) { return kTopologyNames[static_cast<std::size_t>(t)]; }

inline bool is_topology(std::string_view name) {
  return std::find(kTopologyNames.begin(), kTopologyNames.end(), name) != kTopologyNames.end();
}

inline Topology parse_topology(std::string_view name) {
  for (std::size_t i = 0; i < kTopologyNames.size(); ++i) {
    if (kTopologyNames[i] == name) return static_cast<Topology>(i);
  }
  throw ConfigError("unknown generator topology '" + std::string(name) + "'");
}

// Fully connected layer, weights row-major (out x in).
struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  Dense() = default;
  Dense(std::size_t in_dim, std::size_t out_dim) : in(in_dim), out(out_dim), weight(in_dim * out_dim), bias(out_dim) {}

  bool empty() const { return out == 0; }

  void forward(std::span<const double> x, std::span<double> y) const {
    for (std::size_t o = 0; o < out; ++o) {
      const double* w = weight.data() + o * in;
      double acc = bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += w[i] * x[i];
      y[o] = acc;
    }
  }

  // dx += W^T dy (dx may be empty when the input gradient is not needed).
  void backward_input(std::span<const double> dy, std::span<double> dx) const {
    if (dx.empty()) return;
    for (std::size_t o = 0; o < out; ++o) {
      if (dy[o] == 0.0) continue;
      const double* w = weight.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) dx[i] += w[i] * dy[o];
    }
  }

  // grad.W += scale * dy x^T, grad.b += scale * dy
  static void accumulate(Dense& grad, std::span<const double> dy, std::span<const double> x, double scale = 1.0) {
    for (std::size_t o = 0; o < grad.out; ++o) {
      const double d = scale * dy[o];
      if (d == 0.0) continue;
      grad.bias[o] += d;
      double* w = grad.weight.data() + o * grad.in;
      for (std::size_t i = 0; i < grad.in; ++i) w[i] += d * x[i];
    }
  }

  // PyTorch-style default: U(-1/sqrt(in), 1/sqrt(in)) for weights and biases.
  void init_uniform(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(in, 1)));
    for (double& w : weight) w = rng.uniform(-bound, bound);
    for (double& b : bias) b = rng.uniform(-bound, bound);
  }

  void zero() {
    std::fill(weight.begin(), weight.end(), 0.0);
    std::fill(bias.begin(), bias.end(), 0.0);
  }

  friend bool operator==(const Dense&, const Dense&) = default;
};

struct GeneratorShape {
  Topology topology = Topology::CASGN2;
  std::size_t vocab = 0;
  std::size_t embed_dim = 0;
  std::size_t latent_dim = 100;
  std::size_t hidden_dim = 512;

  bool uses_center() const { return topology != Topology::ASGN; }
  bool uses_latent() const { return topology != Topology::ACE; }
  bool gaussian_latent() const { return topology == Topology::CASGN2 || topology == Topology::CASGN3; }
  bool has_hidden() const { return topology != Topology::CASGN2; }
  std::size_t noise_dim() const { return uses_latent() ? latent_dim : 0; }

  // Width of the hidden layer's input: [f(x)] ++ [z].
  std::size_t hidden_input_dim() const {
    switch (topology) {
      case Topology::ASGN: return latent_dim;
      case Topology::CASGN1:
      case Topology::CASGN3: return embed_dim + latent_dim;
      case Topology::ACE: return embed_dim;
      case Topology::CASGN2: return 0;
    }
    return 0;
  }

  friend bool operator==(const GeneratorShape&, const GeneratorShape&) = default;
};

// Activations of one forward pass, kept for backpropagation.
struct ForwardTrace {
  std::vector<double> center;
  std::vector<double> eps;
  std::vector<double> shared_pre;
  std::vector<double> mu;
  std::vector<double> sigma_pre;
  std::vector<double> sigma;
  std::vector<double> z;
  std::vector<double> input;
  std::vector<double> hidden_pre;
  std::vector<double> hidden_act;
  std::vector<double> logits;
  std::vector<double> probs;
  double entropy = 0.0;
};

inline void relu(std::span<const double> pre, std::span<double> out) {
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
}

inline void softmax(std::span<const double> logits, std::span<double> probs) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - peak);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
}

// Entropy from logits and probabilities, exact even when some p underflow.
inline double softmax_entropy(std::span<const double> logits, std::span<const double> probs) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double l : logits) total += std::exp(l - peak);
  const double log_z = peak + std::log(total);
  double h = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) h -= probs[i] * (logits[i] - log_z);
  return std::max(0.0, h);
}

class GeneratorNet {
 public:
  GeneratorNet() = default;

  // Hidden layers get the default uniform init; the output layer starts at
  // zero so the initial conditional is uniform over the vocabulary.
  GeneratorNet(const GeneratorShape& shape, Rng& rng) : shape_(shape) {
    if (shape.vocab == 0 || shape.hidden_dim == 0) throw ConfigError("generator needs vocab and hidden_dim > 0");
    if (shape.uses_center() && shape.embed_dim == 0) throw ConfigError("generator needs embed_dim > 0");
    if (shape.uses_latent() && shape.latent_dim == 0) throw ConfigError("generator needs latent_dim > 0");
    if (shape.gaussian_latent()) {
      shared_ = Dense(shape.embed_dim, shape.hidden_dim);
      mu_head_ = Dense(shape.hidden_dim, shape.latent_dim);
      sigma_head_ = Dense(shape.hidden_dim, shape.latent_dim);
      shared_.init_uniform(rng);
      mu_head_.init_uniform(rng);
      sigma_head_.init_uniform(rng);
    }
    if (shape.has_hidden()) {
      hidden_ = Dense(shape.hidden_input_dim(), shape.hidden_dim);
      hidden_.init_uniform(rng);
      output_ = Dense(shape.hidden_dim, shape.vocab);
    } else {
      output_ = Dense(shape.latent_dim, shape.vocab);
    }
  }

  const GeneratorShape& shape() const { return shape_; }
  Topology topology() const { return shape_.topology; }

  // Layers in serialization order; absent layers are empty.
  std::array<Dense*, 5> layers() { return {&shared_, &mu_head_, &sigma_head_, &hidden_, &output_}; }
  std::array<const Dense*, 5> layers() const { return {&shared_, &mu_head_, &sigma_head_, &hidden_, &output_}; }

  Dense& output_layer() { return output_; }
  const Dense& output_layer() const { return output_; }

  // Same-shaped container with all parameters zero; used for gradients.
  GeneratorNet zeros_like() const {
    GeneratorNet g;
    g.shape_ = shape_;
    auto dst = g.layers();
    auto src = layers();
    for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] = Dense(src[i]->in, src[i]->out);
    return g;
  }

  void forward(std::span<const double> center, std::span<const double> eps, ForwardTrace& t) const {
    if (shape_.uses_center() && center.size() != shape_.embed_dim) {
      throw Error("generator: center vector has dimension " + std::to_string(center.size()) + ", expected " +
                  std::to_string(shape_.embed_dim));
    }
    if (eps.size() != shape_.noise_dim()) throw Error("generator: latent noise has wrong dimension");
    t.center.assign(center.begin(), center.end());
    t.eps.assign(eps.begin(), eps.end());

    if (shape_.gaussian_latent()) {
      const std::size_t h = shape_.hidden_dim;
      const std::size_t k = shape_.latent_dim;
      t.shared_pre.resize(h);
      shared_.forward(center, t.shared_pre);
      std::vector<double> shared_act(h);
      relu(t.shared_pre, shared_act);
      t.mu.resize(k);
      t.sigma_pre.resize(k);
      t.sigma.resize(k);
      t.z.resize(k);
      mu_head_.forward(shared_act, t.mu);
      sigma_head_.forward(shared_act, t.sigma_pre);
      for (std::size_t i = 0; i < k; ++i) {
        t.sigma[i] = softplus(t.sigma_pre[i]);
        t.z[i] = t.mu[i] + t.sigma[i] * eps[i];
      }
    } else {
      t.z.assign(eps.begin(), eps.end());
    }

    std::span<const double> top;
    if (shape_.has_hidden()) {
      t.input.clear();
      if (shape_.uses_center()) t.input.insert(t.input.end(), center.begin(), center.end());
      t.input.insert(t.input.end(), t.z.begin(), t.z.end());
      t.hidden_pre.resize(shape_.hidden_dim);
      t.hidden_act.resize(shape_.hidden_dim);
      hidden_.forward(t.input, t.hidden_pre);
      relu(t.hidden_pre, t.hidden_act);
      top = t.hidden_act;
    } else {
      top = t.z;
    }
    t.logits.resize(shape_.vocab);
    t.probs.resize(shape_.vocab);
    output_.forward(top, t.logits);
    softmax(t.logits, t.probs);
    t.entropy = softmax_entropy(t.logits, t.probs);
  }

  // Accumulates d(objective)/d(params) into `grad` given d(objective)/d(logits).
  // The center embedding is treated as a constant input.
  void backward(const ForwardTrace& t, std::span<const double> dlogits, GeneratorNet& grad) const {
    std::vector<double> dz(shape_.noise_dim(), 0.0);
    if (shape_.has_hidden()) {
      Dense::accumulate(grad.output_, dlogits, t.hidden_act);
      std::vector<double> dhidden(shape_.hidden_dim, 0.0);
      output_.backward_input(dlogits, dhidden);
      for (std::size_t i = 0; i < dhidden.size(); ++i) {
        if (t.hidden_pre[i] <= 0.0) dhidden[i] = 0.0;
      }
      Dense::accumulate(grad.hidden_, dhidden, t.input);
      if (shape_.uses_latent()) {
        std::vector<double> dinput(hidden_.in, 0.0);
        hidden_.backward_input(dhidden, dinput);
        const std::size_t offset = shape_.uses_center() ? shape_.embed_dim : 0;
        std::copy(dinput.begin() + static_cast<std::ptrdiff_t>(offset), dinput.end(), dz.begin());
      }
    } else {
      Dense::accumulate(grad.output_, dlogits, t.z);
      output_.backward_input(dlogits, dz);
    }

    if (shape_.gaussian_latent()) {
      const std::size_t k = shape_.latent_dim;
      std::vector<double> dsigma_pre(k);
      for (std::size_t i = 0; i < k; ++i) dsigma_pre[i] = dz[i] * t.eps[i] * sigmoid(t.sigma_pre[i]);
      std::vector<double> shared_act(shape_.hidden_dim);
      relu(t.shared_pre, shared_act);
      Dense::accumulate(grad.mu_head_, dz, shared_act);
      Dense::accumulate(grad.sigma_head_, dsigma_pre, shared_act);
      std::vector<double> dshared(shape_.hidden_dim, 0.0);
      mu_head_.backward_input(dz, dshared);
      sigma_head_.backward_input(dsigma_pre, dshared);
      for (std::size_t i = 0; i < dshared.size(); ++i) {
        if (t.shared_pre[i] <= 0.0) dshared[i] = 0.0;
      }
      Dense::accumulate(grad.shared_, dshared, t.center);
    }
  }

  // params += lr * grad. Throws before writing anything if grad is non-finite.
  void ascend(const GeneratorNet& grad, double lr) {
    auto src = grad.layers();
    for (const Dense* layer : src) {
      for (double v : layer->weight) {
        if (!std::isfinite(v)) throw NumericError("non-finite generator gradient");
      }
      for (double v : layer->bias) {
        if (!std::isfinite(v)) throw NumericError("non-finite generator gradient");
      }
    }
    auto dst = layers();
    for (std::size_t l = 0; l < dst.size(); ++l) {
      for (std::size_t i = 0; i < dst[l]->weight.size(); ++i) dst[l]->weight[i] += lr * src[l]->weight[i];
      for (std::size_t i = 0; i < dst[l]->bias.size(); ++i) dst[l]->bias[i] += lr * src[l]->bias[i];
    }
  }

  std::vector<double> draw_noise(Rng& rng) const {
    std::vector<double> eps(shape_.noise_dim());
    for (double& e : eps) e = rng.normal();
    return eps;
  }

  friend bool operator==(const GeneratorNet&, const GeneratorNet&) = default;

  // Binary layout (little-endian):
  //   char[8] "WCCGEN01"; u32 version = 1; u32 topology index;
  //   u64 vocab, embed_dim, latent_dim, hidden_dim;
  //   5 layers [shared, mu_head, sigma_head, hidden, output], each:
  //     u64 in, u64 out, f64 weight[out*in] (row-major), f64 bias[out]
  //   Absent layers are stored with in = out = 0.
  void save(std::ostream& out) const {
    static_assert(std::endian::native == std::endian::little, "generator blob assumes a little-endian host");
    out.write(kMagic, 8);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(shape_.topology));
    put<std::uint64_t>(out, shape_.vocab);
    put<std::uint64_t>(out, shape_.embed_dim);
    put<std::uint64_t>(out, shape_.latent_dim);
    put<std::uint64_t>(out, shape_.hidden_dim);
    for (const Dense* layer : layers()) {
      put<std::uint64_t>(out, layer->in);
      put<std::uint64_t>(out, layer->out);
      out.write(reinterpret_cast<const char*>(layer->weight.data()),
                static_cast<std::streamsize>(layer->weight.size() * sizeof(double)));
      out.write(reinterpret_cast<const char*>(layer->bias.data()),
                static_cast<std::streamsize>(layer->bias.size() * sizeof(double)));
    }
    if (!out) throw Error("failed to write generator parameters");
  }

  static GeneratorNet load(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw Error("not a generator parameter blob");
    if (get<std::uint32_t>(in) != kVersion) throw Error("unsupported generator blob version");
    GeneratorNet net;
    const auto topo = get<std::uint32_t>(in);
    if (topo >= kTopologyNames.size()) throw Error("generator blob: bad topology");
    net.shape_.topology = static_cast<Topology>(topo);
    net.shape_.vocab = get<std::uint64_t>(in);
    net.shape_.embed_dim = get<std::uint64_t>(in);
    net.shape_.latent_dim = get<std::uint64_t>(in);
    net.shape_.hidden_dim = get<std::uint64_t>(in);
    for (Dense* layer : net.layers()) {
      const auto lin = get<std::uint64_t>(in);
      const auto lout = get<std::uint64_t>(in);
      if (lin > (1u << 28) || lout > (1u << 28)) throw Error("generator blob: implausible layer size");
      *layer = Dense(lin, lout);
      in.read(reinterpret_cast<char*>(layer->weight.data()),
              static_cast<std::streamsize>(layer->weight.size() * sizeof(double)));
      in.read(reinterpret_cast<char*>(layer->bias.data()),
              static_cast<std::streamsize>(layer->bias.size() * sizeof(double)));
      if (!in) throw Error("generator blob truncated");
    }
    if (net.output_.out != net.shape_.vocab) throw Error("generator blob: output layer does not match vocab");
    return net;
  }

 private:
  static constexpr char kMagic[8] = {'W', 'C', 'C', 'G', 'E', 'N', '0', '1'};
  static constexpr std::uint32_t kVersion = 1;

  template <typename T>
  static void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  template <typename T>
  static T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw Error("generator blob truncated");
    return v;
  }

  GeneratorShape shape_;
  Dense shared_;
  Dense mu_head_;
  Dense sigma_head_;
  Dense hidden_;
  Dense output_;
};

struct GeneratorSample {
  WordId x = 0;
  WordId y = 0;
  double log_prob = 0.0;
  double entropy = 0.0;
  std::vector<double> eps;
  std::vector<double> z;
};

using GeneratorSampleBatch = std::vector<GeneratorSample>;

inline std::span<const double> center_input(const GeneratorNet& net, const EmbeddingTable& f, WordId x) {
  if (!net.shape().uses_center()) return {};
  if (f.dim() != net.shape().embed_dim) throw Error("generator: embedding dimension mismatch");
  return f.row(x);
}

inline WordId draw_categorical(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<WordId>(i);
  }
  // u landed in the rounding gap at the top; return the last outcome with mass.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<WordId>(i);
  }
  return 0;
}

// One forward pass and one categorical draw per center.
inline GeneratorSampleBatch generate(const GeneratorNet& net, const EmbeddingTable& f, std::span<const WordId> centers,
                                     Rng& rng) {
  if (net.shape().vocab != f.rows()) throw Error("generator: vocabulary size mismatch");
  GeneratorSampleBatch batch;
  batch.reserve(centers.size());
  ForwardTrace trace;
  for (const WordId x : centers) {
    GeneratorSample s;
    s.x = x;
    s.eps = net.draw_noise(rng);
    net.forward(center_input(net, f, x), s.eps, trace);
    s.y = draw_categorical(trace.probs, rng);
    s.log_prob = std::min(0.0, std::log(trace.probs[static_cast<std::size_t>(s.y)]));
    s.entropy = trace.entropy;
    s.z = trace.z;
    batch.push_back(std::move(s));
  }
  return batch;
}

// Q(y | x) for a fixed latent draw.
inline std::vector<double> conditional_probs(const GeneratorNet& net, std::span<const double> center,
                                             std::span<const double> eps) {
  ForwardTrace t;
  net.forward(center, eps, t);
  return t.probs;
}

// Q(y | x) marginalised over the latent by Monte Carlo; exact for ACE.
inline std::vector<double> marginal_conditional(const GeneratorNet& net, const EmbeddingTable& f, WordId x, Rng& rng,
                                                std::size_t latent_draws) {
  const std::size_t draws = net.shape().uses_latent() ? std::max<std::size_t>(latent_draws, 1) : 1;
  std::vector<double> mix(net.shape().vocab, 0.0);
  ForwardTrace t;
  for (std::size_t d = 0; d < draws; ++d) {
    const auto eps = net.draw_noise(rng);
    net.forward(center_input(net, f, x), eps, t);
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += t.probs[i];
  }
  for (double& m : mix) m /= static_cast<double>(draws);
  return mix;
}

// Reward of a generated pair: its contribution -log sigma(-s) to the
// classifier loss, which the generator maximizes.
inline double generator_reward(double s) { return softplus(s); }

// R = max(0, log(alpha) - H).
inline double entropy_regularizer(double entropy, double alpha) {
  if (!(alpha >= 1.0)) throw ConfigError("entropy threshold alpha must be >= 1");
  return std::max(0.0, std::log(alpha) - entropy);
}

// Mean reward minus mean entropy penalty.
inline double generator_objective(const GeneratorSampleBatch& sample, std::span<const double> scores, double alpha) {
  if (sample.size() != scores.size()) throw Error("generator_objective: sample/score length mismatch");
  if (sample.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    total += generator_reward(scores[i]) - entropy_regularizer(sample[i].entropy, alpha);
  }
  return total / static_cast<double>(sample.size());
}

// d log p_y / d logits = e_y - p
inline void add_log_prob_logit_grad(std::span<const double> probs, WordId y, double scale, std::span<double> dlogits) {
  for (std::size_t j = 0; j < probs.size(); ++j) dlogits[j] -= scale * probs[j];
  dlogits[static_cast<std::size_t>(y)] += scale;
}

// d(-R)/d logits. With H = -sum p log p, dH/dl_j = -p_j (log p_j + H); the
// penalty is active only while H < log(alpha).
inline void add_entropy_penalty_logit_grad(const ForwardTrace& t, double alpha, double scale,
                                           std::span<double> dlogits) {
  if (entropy_regularizer(t.entropy, alpha) <= 0.0) return;
  const double peak = *std::max_element(t.logits.begin(), t.logits.end());
  double total = 0.0;
  for (double l : t.logits) total += std::exp(l - peak);
  const double log_z = peak + std::log(total);
  for (std::size_t j = 0; j < t.probs.size(); ++j) {
    const double log_p = t.logits[j] - log_z;
    dlogits[j] += scale * (-t.probs[j] * (log_p + t.entropy));
  }
}

// Scalar moving-average reward baseline.
struct RewardBaseline {
  double value = 0.0;
  double decay = 0.99;
  bool initialized = false;

  double current(double batch_mean) {
    if (!initialized) {
      value = batch_mean;
      initialized = true;
    }
    return value;
  }
  void update(double batch_mean) {
    if (!initialized) {
      value = batch_mean;
      initialized = true;
      return;
    }
    value = decay * value + (1.0 - decay) * batch_mean;
  }
};

struct GeneratorStepStats {
  double objective = 0.0;
  double mean_reward = 0.0;
  double mean_entropy = 0.0;
  double mean_penalty = 0.0;
  double baseline = 0.0;
};

// Gradient of the per-batch surrogate
//   mean_i [ (r_i - b) log G(y_i | x_i, z_i) - R(x_i) ]
// The categorical draw uses the score-function estimator; the Gaussian latent
// uses the pathwise derivative through z = mu + sigma * eps.
inline GeneratorNet surrogate_gradient(const GeneratorNet& net, const EmbeddingTable& f,
                                       const GeneratorSampleBatch& sample, std::span<const double> rewards,
                                       double baseline, double alpha) {
  if (sample.size() != rewards.size()) throw Error("reinforce: sample/reward length mismatch");
  GeneratorNet grad = net.zeros_like();
  if (sample.empty()) return grad;
  const double inv_n = 1.0 / static_cast<double>(sample.size());
  ForwardTrace t;
  std::vector<double> dlogits(net.shape().vocab);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const GeneratorSample& s = sample[i];
    net.forward(center_input(net, f, s.x), s.eps, t);
    std::fill(dlogits.begin(), dlogits.end(), 0.0);
    add_log_prob_logit_grad(t.probs, s.y, (rewards[i] - baseline) * inv_n, dlogits);
    add_entropy_penalty_logit_grad(t, alpha, inv_n, dlogits);
    net.backward(t, dlogits, grad);
  }
  return grad;
}

// One REINFORCE ascent step with the entropy penalty, then baseline update.
inline GeneratorStepStats reinforce_step(GeneratorNet& net, const EmbeddingTable& f,
                                         const GeneratorSampleBatch& sample, std::span<const double> rewards,
                                         RewardBaseline& baseline, double lr, double alpha) {
  GeneratorStepStats stats;
  if (sample.empty()) return stats;
  double reward_sum = 0.0;
  double entropy_sum = 0.0;
  double penalty_sum = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    reward_sum += rewards[i];
    entropy_sum += sample[i].entropy;
    penalty_sum += entropy_regularizer(sample[i].entropy, alpha);
  }
  const double n = static_cast<double>(sample.size());
  stats.mean_reward = reward_sum / n;
  stats.mean_entropy = entropy_sum / n;
  stats.mean_penalty = penalty_sum / n;
  stats.objective = stats.mean_reward - stats.mean_penalty;
  stats.baseline = baseline.current(stats.mean_reward);
  if (lr > 0.0) {
    const GeneratorNet grad = surrogate_gradient(net, f, sample, rewards, stats.baseline, alpha);
    net.ascend(grad, lr);
  }
  baseline.update(stats.mean_reward);
  return stats;
}

}  // namespace wcc
