#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prodlm/error.hpp"
#include "prodlm/hash.hpp"
#include "prodlm/tokenizer.hpp"

// Pre-norm decoder-only transformer with learned positions, GELU
// feed-forward blocks and a tied output head. Everything is templated on
// the scalar type; the library instantiates double.
namespace prodlm::lm {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using ColVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct ModelConfig {
  int n_layers = 4;
  int n_heads = 4;
  int d_model = 128;
  int d_ff = 512;
  int context_len = 256;
  int vocab_size = 0;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig.
  void validate() const;
  int head_dim() const { return d_model / n_heads; }
  /// Closed-form count of every scalar in Parameters.
  std::size_t parameter_count() const;

  bool operator==(const ModelConfig&) const = default;
};

template <typename Scalar>
struct LayerWeights {
  Mat<Scalar> wq, wk, wv, wo;
  Mat<Scalar> w1;
  RowVec<Scalar> b1;
  Mat<Scalar> w2;
  RowVec<Scalar> b2;
  RowVec<Scalar> ln1_gain, ln1_bias;
  RowVec<Scalar> ln2_gain, ln2_bias;
};

template <typename Scalar>
struct Parameters {
  Mat<Scalar> token_embedding;     // [vocab × d_model], also the output head
  Mat<Scalar> position_embedding;  // [context × d_model]
  std::vector<LayerWeights<Scalar>> layers;
  RowVec<Scalar> final_gain, final_bias;
};

template <typename Scalar>
using Gradients = Parameters<Scalar>;

template <typename Scalar>
struct Model {
  ModelConfig config;
  Parameters<Scalar> params;
};

/// Visits every tensor in declaration order. With several parameter sets
/// (same shapes) the callback receives the matching tensor of each.
template <typename F, typename P, typename... Ps>
void for_each_tensor(F&& fn, P& first, Ps&... rest) {
  fn(std::string("token_embedding"), first.token_embedding, rest.token_embedding...);
  fn(std::string("position_embedding"), first.position_embedding, rest.position_embedding...);
  for (std::size_t l = 0; l < first.layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    fn(p + "wq", first.layers[l].wq, rest.layers[l].wq...);
    fn(p + "wk", first.layers[l].wk, rest.layers[l].wk...);
    fn(p + "wv", first.layers[l].wv, rest.layers[l].wv...);
    fn(p + "wo", first.layers[l].wo, rest.layers[l].wo...);
    fn(p + "w1", first.layers[l].w1, rest.layers[l].w1...);
    fn(p + "b1", first.layers[l].b1, rest.layers[l].b1...);
    fn(p + "w2", first.layers[l].w2, rest.layers[l].w2...);
    fn(p + "b2", first.layers[l].b2, rest.layers[l].b2...);
    fn(p + "ln1_gain", first.layers[l].ln1_gain, rest.layers[l].ln1_gain...);
    fn(p + "ln1_bias", first.layers[l].ln1_bias, rest.layers[l].ln1_bias...);
    fn(p + "ln2_gain", first.layers[l].ln2_gain, rest.layers[l].ln2_gain...);
    fn(p + "ln2_bias", first.layers[l].ln2_bias, rest.layers[l].ln2_bias...);
  }
  fn(std::string("final_gain"), first.final_gain, rest.final_gain...);
  fn(std::string("final_bias"), first.final_bias, rest.final_bias...);
}

template <typename To, typename From>
Model<To> cast_model(const Model<From>& model) {
  Model<To> out{model.config, {}};
  out.params.layers.resize(model.params.layers.size());
  for_each_tensor([](const std::string&, auto& dst, const auto& src) { dst = src.template cast<To>(); },
                  out.params, model.params);
  return out;
}

template <typename Scalar>
Parameters<Scalar> zeros_like(const Parameters<Scalar>& params) {
  Parameters<Scalar> out = params;
  for_each_tensor([](const std::string&, auto& t) { t.setZero(); }, out);
  return out;
}

template <typename Scalar>
std::size_t count_scalars(const Parameters<Scalar>& params) {
  std::size_t n = 0;
  for_each_tensor([&n](const std::string&, const auto& t) { n += static_cast<std::size_t>(t.size()); },
                  params);
  return n;
}

template <typename Scalar>
bool all_finite(const Parameters<Scalar>& params) {
  bool ok = true;
  for_each_tensor([&ok](const std::string&, const auto& t) { ok = ok && t.allFinite(); }, params);
  return ok;
}

/// Normal(0, 0.02) weights, unit gains, zero biases.
template <typename Scalar>
Model<Scalar> init_params(const ModelConfig& config) {
  config.validate();
  Rng rng(hash64(config.seed, "init"));
  const int d = config.d_model;
  auto normal = [&rng](int rows, int cols) {
    Mat<Scalar> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.normal(0.0, 0.02));
    return m;
  };
  auto constant = [](int n, double v) { return RowVec<Scalar>::Constant(n, static_cast<Scalar>(v)); };

  Model<Scalar> model{config, {}};
  auto& p = model.params;
  p.token_embedding = normal(config.vocab_size, d);
  p.position_embedding = normal(config.context_len, d);
  p.layers.resize(static_cast<std::size_t>(config.n_layers));
  for (auto& layer : p.layers) {
    layer.wq = normal(d, d);
    layer.wk = normal(d, d);
    layer.wv = normal(d, d);
    layer.wo = normal(d, d);
    layer.w1 = normal(d, config.d_ff);
    layer.b1 = constant(config.d_ff, 0.0);
    layer.w2 = normal(config.d_ff, d);
    layer.b2 = constant(d, 0.0);
    layer.ln1_gain = constant(d, 1.0);
    layer.ln1_bias = constant(d, 0.0);
    layer.ln2_gain = constant(d, 1.0);
    layer.ln2_bias = constant(d, 0.0);
  }
  p.final_gain = constant(d, 1.0);
  p.final_bias = constant(d, 0.0);
  return model;
}

/// Appends `n_new` embedding rows, each the mean of the existing rows plus
/// normal(0, noise_scale) noise. Existing rows are copied bit-exactly.
template <typename Scalar>
Model<Scalar> expand_embeddings(const Model<Scalar>& model, int n_new, double noise_scale,
                                std::uint64_t seed) {
  if (n_new < 1 || noise_scale < 0.0) {
    throw Error(ErrorCode::InvalidArguments, "expand_embeddings needs n_new >= 1, noise >= 0");
  }
  Model<Scalar> out = model;
  const auto& old = model.params.token_embedding;
  const Eigen::Index rows = old.rows();
  const RowVec<Scalar> mean = old.colwise().mean();
  out.params.token_embedding.resize(rows + n_new, old.cols());
  out.params.token_embedding.topRows(rows) = old;
  Rng rng(hash64(seed, "expand"));
  for (Eigen::Index r = rows; r < rows + n_new; ++r) {
    for (Eigen::Index c = 0; c < old.cols(); ++c) {
      const Scalar noise = noise_scale == 0.0 ? Scalar(0) : static_cast<Scalar>(rng.normal(0.0, noise_scale));
      out.params.token_embedding(r, c) = mean(c) + noise;
    }
  }
  out.config.vocab_size = static_cast<int>(rows + n_new);
  return out;
}

namespace detail {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kGeluCoeff = 0.044715;

template <typename Scalar>
struct LayerNormCache {
  Mat<Scalar> normalized;  // x̂
  ColVec<Scalar> inv_std;
};

template <typename Scalar>
Mat<Scalar> layer_norm(const Mat<Scalar>& x, const RowVec<Scalar>& gain, const RowVec<Scalar>& bias,
                       LayerNormCache<Scalar>& cache) {
  const ColVec<Scalar> mean = x.rowwise().mean();
  Mat<Scalar> centered = x.colwise() - mean;
  const ColVec<Scalar> var = centered.array().square().rowwise().mean();
  cache.inv_std = (var.array() + Scalar(kLayerNormEps)).rsqrt();
  cache.normalized = centered.array().colwise() * cache.inv_std.array();
  return (cache.normalized.array().rowwise() * gain.array()).rowwise() + bias.array();
}

template <typename Scalar>
Mat<Scalar> layer_norm_backward(const Mat<Scalar>& dy, const RowVec<Scalar>& gain,
                                const LayerNormCache<Scalar>& cache, RowVec<Scalar>& dgain,
                                RowVec<Scalar>& dbias) {
  const auto& xhat = cache.normalized;
  dgain += (dy.array() * xhat.array()).colwise().sum().matrix();
  dbias += dy.colwise().sum();
  const Mat<Scalar> dxhat = dy.array().rowwise() * gain.array();
  const ColVec<Scalar> mean_dxhat = dxhat.rowwise().mean();
  const ColVec<Scalar> mean_dxhat_xhat = (dxhat.array() * xhat.array()).rowwise().mean();
  Mat<Scalar> dx = dxhat;
  dx.colwise() -= mean_dxhat;
  dx -= (xhat.array().colwise() * mean_dxhat_xhat.array()).matrix();
  return dx.array().colwise() * cache.inv_std.array();
}

template <typename Scalar>
using Array2 = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Derived>
Array2<typename Derived::Scalar> gelu(const Eigen::ArrayBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  const Scalar k = static_cast<Scalar>(std::sqrt(2.0 / std::numbers::pi));
  return Scalar(0.5) * u * (Scalar(1) + (k * (u + Scalar(kGeluCoeff) * u.cube())).tanh());
}

template <typename Derived>
Array2<typename Derived::Scalar> gelu_grad(const Eigen::ArrayBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  const Scalar k = static_cast<Scalar>(std::sqrt(2.0 / std::numbers::pi));
  const Array2<Scalar> t = (k * (u + Scalar(kGeluCoeff) * u.cube())).tanh();
  return Scalar(0.5) * (Scalar(1) + t) +
         Scalar(0.5) * u * (Scalar(1) - t.square()) * k *
             (Scalar(1) + Scalar(3 * kGeluCoeff) * u.square());
}

template <typename Scalar>
void softmax_rows_inplace(Mat<Scalar>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

}  // namespace detail

template <typename Scalar>
struct LayerCache {
  Mat<Scalar> input;
  detail::LayerNormCache<Scalar> ln1;
  Mat<Scalar> attn_in;  // ln1 output
  Mat<Scalar> q, k, v;
  std::vector<Mat<Scalar>> probs;  // per head, causal [T × T]
  Mat<Scalar> heads;               // concatenated head outputs
  detail::LayerNormCache<Scalar> ln2;
  Mat<Scalar> ff_in;  // ln2 output
  Mat<Scalar> pre_act;
  Mat<Scalar> act;
};

template <typename Scalar>
struct ForwardCache {
  std::vector<TokenId> tokens;
  std::vector<LayerCache<Scalar>> layers;
  detail::LayerNormCache<Scalar> final_ln;
  Mat<Scalar> final_out;
};

template <typename Scalar>
void check_tokens(const ModelConfig& config, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw Error(ErrorCode::InvalidArguments, "empty token sequence");
  if (tokens.size() > static_cast<std::size_t>(config.context_len)) {
    throw Error(ErrorCode::SequenceTooLong, std::to_string(tokens.size()) + " > context " +
                                                std::to_string(config.context_len));
  }
  for (TokenId t : tokens) {
    if (t < 0 || t >= config.vocab_size) {
      throw Error(ErrorCode::IndexOutOfRange, "token " + std::to_string(t));
    }
  }
}

/// Logits [len × vocab]; fills `cache` for backward when given.
template <typename Scalar>
Mat<Scalar> forward(const Model<Scalar>& model, std::span<const TokenId> tokens,
                    ForwardCache<Scalar>* cache = nullptr) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  check_tokens<Scalar>(cfg, tokens);
  const auto T = static_cast<Eigen::Index>(tokens.size());
  const int dh = cfg.head_dim();
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

  ForwardCache<Scalar> local;
  ForwardCache<Scalar>& c = cache ? *cache : local;
  c.tokens.assign(tokens.begin(), tokens.end());
  c.layers.resize(p.layers.size());

  Mat<Scalar> x(T, cfg.d_model);
  for (Eigen::Index i = 0; i < T; ++i) {
    x.row(i) = p.token_embedding.row(tokens[static_cast<std::size_t>(i)]) + p.position_embedding.row(i);
  }

  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& w = p.layers[l];
    auto& lc = c.layers[l];
    lc.input = x;
    lc.attn_in = detail::layer_norm(x, w.ln1_gain, w.ln1_bias, lc.ln1);
    lc.q.noalias() = lc.attn_in * w.wq;
    lc.k.noalias() = lc.attn_in * w.wk;
    lc.v.noalias() = lc.attn_in * w.wv;
    lc.heads.resize(T, cfg.d_model);
    lc.probs.resize(static_cast<std::size_t>(cfg.n_heads));
    for (int h = 0; h < cfg.n_heads; ++h) {
      auto& probs = lc.probs[static_cast<std::size_t>(h)];
      probs.noalias() = (lc.q.middleCols(h * dh, dh) * lc.k.middleCols(h * dh, dh).transpose()) * scale;
      for (Eigen::Index i = 0; i < T; ++i) {
        for (Eigen::Index j = i + 1; j < T; ++j) probs(i, j) = -std::numeric_limits<Scalar>::infinity();
      }
      detail::softmax_rows_inplace(probs);
      lc.heads.middleCols(h * dh, dh).noalias() = probs * lc.v.middleCols(h * dh, dh);
    }
    x.noalias() += lc.heads * w.wo;

    lc.ff_in = detail::layer_norm(x, w.ln2_gain, w.ln2_bias, lc.ln2);
    lc.pre_act = (lc.ff_in * w.w1).rowwise() + w.b1;
    lc.act = detail::gelu(lc.pre_act.array()).matrix();
    x += (lc.act * w.w2).rowwise() + w.b2;
  }

  c.final_out = detail::layer_norm(x, p.final_gain, p.final_bias, c.final_ln);
  return c.final_out * p.token_embedding.transpose();
}

/// Mean cross-entropy over positions with mask != 0. When `dlogits` is
/// given it receives the gradient of the loss w.r.t. the logits.
template <typename Scalar>
Scalar sft_loss(const Mat<Scalar>& logits, std::span<const TokenId> targets,
                std::span<const std::uint8_t> mask, Mat<Scalar>* dlogits = nullptr) {
  if (targets.size() != static_cast<std::size_t>(logits.rows()) || mask.size() != targets.size()) {
    throw Error(ErrorCode::LengthMismatch, "logits/targets/mask lengths differ");
  }
  std::size_t count = 0;
  for (auto m : mask) count += m ? 1 : 0;
  if (count == 0) throw Error(ErrorCode::AllMasked, "no response tokens to train on");
  if (dlogits) dlogits->setZero(logits.rows(), logits.cols());
  const Scalar inv = Scalar(1) / static_cast<Scalar>(count);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const TokenId target = targets[static_cast<std::size_t>(i)];
    if (target < 0 || target >= logits.cols()) {
      throw Error(ErrorCode::IndexOutOfRange, "target " + std::to_string(target));
    }
    const auto row = logits.row(i);
    const Scalar max = row.maxCoeff();
    const RowVec<Scalar> e = (row.array() - max).exp().matrix();
    const Scalar sum = e.sum();
    total += std::log(sum) + max - row(target);
    if (dlogits) {
      dlogits->row(i) = e * (inv / sum);
      (*dlogits)(i, target) -= inv;
    }
  }
  return total * inv;
}

/// Adds weight × ∂loss/∂params into `grads` and returns the loss.
template <typename Scalar>
Scalar accumulate_gradients(const Model<Scalar>& model, std::span<const TokenId> tokens,
                            std::span<const TokenId> targets, std::span<const std::uint8_t> mask,
                            Gradients<Scalar>& grads, Scalar weight = Scalar(1)) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  ForwardCache<Scalar> c;
  const Mat<Scalar> logits = forward(model, tokens, &c);
  Mat<Scalar> dlogits;
  const Scalar loss = sft_loss(logits, targets, mask, &dlogits);
  dlogits *= weight;

  const auto T = static_cast<Eigen::Index>(tokens.size());
  const int dh = cfg.head_dim();
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

  grads.token_embedding.noalias() += dlogits.transpose() * c.final_out;
  Mat<Scalar> dx = detail::layer_norm_backward<Scalar>(dlogits * p.token_embedding, p.final_gain,
                                                       c.final_ln, grads.final_gain, grads.final_bias);

  for (std::size_t l = p.layers.size(); l-- > 0;) {
    const auto& w = p.layers[l];
    auto& g = grads.layers[l];
    const auto& lc = c.layers[l];

    // Feed-forward block; dx flows through the residual unchanged.
    g.w2.noalias() += lc.act.transpose() * dx;
    g.b2 += dx.colwise().sum();
    Mat<Scalar> dpre = (dx * w.w2.transpose()).array() * detail::gelu_grad(lc.pre_act.array());
    g.w1.noalias() += lc.ff_in.transpose() * dpre;
    g.b1 += dpre.colwise().sum();
    dx += detail::layer_norm_backward<Scalar>(dpre * w.w1.transpose(), w.ln2_gain, lc.ln2, g.ln2_gain,
                                              g.ln2_bias);

    // Attention block.
    g.wo.noalias() += lc.heads.transpose() * dx;
    const Mat<Scalar> dheads = dx * w.wo.transpose();
    Mat<Scalar> dq(T, cfg.d_model), dk(T, cfg.d_model), dv(T, cfg.d_model);
    for (int h = 0; h < cfg.n_heads; ++h) {
      const auto& probs = lc.probs[static_cast<std::size_t>(h)];
      const auto dout = dheads.middleCols(h * dh, dh);
      Mat<Scalar> dprobs = dout * lc.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh).noalias() = probs.transpose() * dout;
      const ColVec<Scalar> row_dot = (dprobs.array() * probs.array()).rowwise().sum();
      Mat<Scalar> dscores = probs.array() * (dprobs.colwise() - row_dot).array();
      dscores *= scale;
      dq.middleCols(h * dh, dh).noalias() = dscores * lc.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh).noalias() = dscores.transpose() * lc.q.middleCols(h * dh, dh);
    }
    g.wq.noalias() += lc.attn_in.transpose() * dq;
    g.wk.noalias() += lc.attn_in.transpose() * dk;
    g.wv.noalias() += lc.attn_in.transpose() * dv;
    Mat<Scalar> dattn_in = dq * w.wq.transpose();
    dattn_in.noalias() += dk * w.wk.transpose();
    dattn_in.noalias() += dv * w.wv.transpose();
    dx += detail::layer_norm_backward<Scalar>(dattn_in, w.ln1_gain, lc.ln1, g.ln1_gain, g.ln1_bias);
  }

  for (Eigen::Index i = 0; i < T; ++i) {
    grads.token_embedding.row(tokens[static_cast<std::size_t>(i)]) += dx.row(i);
    grads.position_embedding.row(i) += dx.row(i);
  }
  return loss;
}

/// Exact gradients of sft_loss for a single sequence.
template <typename Scalar>
Gradients<Scalar> backward(const Model<Scalar>& model, std::span<const TokenId> tokens,
                           std::span<const TokenId> targets, std::span<const std::uint8_t> mask) {
  Gradients<Scalar> grads = zeros_like(model.params);
  accumulate_gradients(model, tokens, targets, mask, grads);
  return grads;
}

/// Incremental decoding state: cached keys and values per layer.
template <typename Scalar>
class DecodeState {
 public:
  explicit DecodeState(const ModelConfig& config)
      : d_model_(config.d_model), keys_(static_cast<std::size_t>(config.n_layers)),
        values_(static_cast<std::size_t>(config.n_layers)) {}

  int length() const { return length_; }

  /// Feeds one token and returns the next-token logits.
  RowVec<Scalar> step(const Model<Scalar>& model, TokenId token);

 private:
  int d_model_;
  int length_ = 0;
  std::vector<std::vector<Scalar>> keys_;
  std::vector<std::vector<Scalar>> values_;
};

template <typename Scalar>
RowVec<Scalar> DecodeState<Scalar>::step(const Model<Scalar>& model, TokenId token) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  if (length_ >= cfg.context_len) {
    throw Error(ErrorCode::SequenceTooLong, "decode state is at context length");
  }
  if (token < 0 || token >= cfg.vocab_size) {
    throw Error(ErrorCode::IndexOutOfRange, "token " + std::to_string(token));
  }
  const int dh = cfg.head_dim();
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  const int pos = length_;
  const int len = pos + 1;

  Mat<Scalar> x = p.token_embedding.row(token) + p.position_embedding.row(pos);
  detail::LayerNormCache<Scalar> scratch;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& w = p.layers[l];
    const Mat<Scalar> a = detail::layer_norm(x, w.ln1_gain, w.ln1_bias, scratch);
    const Mat<Scalar> q = a * w.wq;
    const Mat<Scalar> k = a * w.wk;
    const Mat<Scalar> v = a * w.wv;
    keys_[l].insert(keys_[l].end(), k.data(), k.data() + d_model_);
    values_[l].insert(values_[l].end(), v.data(), v.data() + d_model_);
    const Eigen::Map<const Mat<Scalar>> keys(keys_[l].data(), len, d_model_);
    const Eigen::Map<const Mat<Scalar>> values(values_[l].data(), len, d_model_);
    Mat<Scalar> heads(1, d_model_);
    for (int h = 0; h < cfg.n_heads; ++h) {
      Mat<Scalar> scores = (q.middleCols(h * dh, dh) * keys.middleCols(h * dh, dh).transpose()) * scale;
      detail::softmax_rows_inplace(scores);
      heads.middleCols(h * dh, dh).noalias() = scores * values.middleCols(h * dh, dh);
    }
    x.noalias() += heads * w.wo;
    const Mat<Scalar> f = detail::layer_norm(x, w.ln2_gain, w.ln2_bias, scratch);
    const Mat<Scalar> act = detail::gelu(((f * w.w1).rowwise() + w.b1).array()).matrix();
    x += (act * w.w2).rowwise() + w.b2;
  }
  ++length_;
  const Mat<Scalar> out = detail::layer_norm(x, p.final_gain, p.final_bias, scratch);
  return out * p.token_embedding.transpose();
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<std::pair<std::string, double>> per_tensor;
};

/// Central-difference check of every parameter of a random model on one
/// random sequence. `tamper` may edit the analytic gradients before the
/// comparison.
GradCheckResult grad_check_detailed(const ModelConfig& config, std::uint64_t seed, double epsilon,
                                    void (*tamper)(Gradients<double>&) = nullptr);
double grad_check(const ModelConfig& config, std::uint64_t seed, double epsilon);

extern template Model<double> init_params<double>(const ModelConfig&);
extern template Mat<double> forward<double>(const Model<double>&, std::span<const TokenId>,
                                            ForwardCache<double>*);
extern template double accumulate_gradients<double>(const Model<double>&, std::span<const TokenId>,
                                                    std::span<const TokenId>,
                                                    std::span<const std::uint8_t>, Gradients<double>&,
                                                    double);
extern template class DecodeState<double>;

}  // namespace prodlm::lm
