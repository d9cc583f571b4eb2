#include <algorithm>
#include <cmath>

#include "prodlm/lm/transformer.hpp"

namespace prodlm::lm {

void ModelConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidConfig, why); };
  if (n_layers <= 0 || n_heads <= 0 || d_model <= 0 || d_ff <= 0 || context_len <= 0) {
    fail("model dimensions must be positive");
  }
  if (d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
  if (vocab_size < 5) fail("vocab_size must be at least 5");
}

std::size_t ModelConfig::parameter_count() const {
  const auto d = static_cast<std::size_t>(d_model);
  const auto ff = static_cast<std::size_t>(d_ff);
  const std::size_t per_layer = 4 * d * d + d * ff + ff + ff * d + d + 4 * d;
  return static_cast<std::size_t>(vocab_size) * d + static_cast<std::size_t>(context_len) * d +
         static_cast<std::size_t>(n_layers) * per_layer + 2 * d;
}

GradCheckResult grad_check_detailed(const ModelConfig& config, std::uint64_t seed, double epsilon,
                                    void (*tamper)(Gradients<double>&)) {
  Model<double> model = init_params<double>(config);
  Rng rng(hash64(seed, "grad_check"));
  // Move away from the symmetric init so every path carries signal.
  for_each_tensor(
      [&rng](const std::string&, auto& t) {
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += rng.normal(0.0, 0.1);
      },
      model.params);

  const std::size_t len = static_cast<std::size_t>(std::min(config.context_len, 12));
  std::vector<TokenId> tokens(len), targets(len);
  std::vector<std::uint8_t> mask(len);
  for (std::size_t i = 0; i < len; ++i) {
    tokens[i] = static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(config.vocab_size)));
    targets[i] = static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(config.vocab_size)));
    mask[i] = rng.below(3) != 0 ? 1 : 0;
  }
  mask[len - 1] = 1;

  Gradients<double> analytic = backward(model, tokens, targets, mask);
  if (tamper) tamper(analytic);

  // The finite-difference side runs in extended precision so that
  // roundoff in the loss stays far below the central-difference step.
  Model<long double> probe = cast_model<long double>(model);
  auto loss_at = [&]() {
    return sft_loss(forward(probe, tokens), targets, mask);
  };

  GradCheckResult result;
  for_each_tensor(
      [&](const std::string& name, auto& param, auto& grad) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < param.size(); ++i) {
          const long double original = param.data()[i];
          param.data()[i] = original + epsilon;
          const long double up = loss_at();
          param.data()[i] = original - epsilon;
          const long double down = loss_at();
          param.data()[i] = original;
          const double numeric = static_cast<double>((up - down) / (2.0L * epsilon));
          const double a = grad.data()[i];
          const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
          worst = std::max(worst, std::abs(a - numeric) / denom);
        }
        result.per_tensor.emplace_back(name, worst);
        result.max_rel_error = std::max(result.max_rel_error, worst);
      },
      probe.params, analytic);
  return result;
}

double grad_check(const ModelConfig& config, std::uint64_t seed, double epsilon) {
  return grad_check_detailed(config, seed, epsilon).max_rel_error;
}

template Model<double> init_params<double>(const ModelConfig&);
template Mat<double> forward<double>(const Model<double>&, std::span<const TokenId>,
                                     ForwardCache<double>*);
template double accumulate_gradients<double>(const Model<double>&, std::span<const TokenId>,
                                             std::span<const TokenId>, std::span<const std::uint8_t>,
                                             Gradients<double>&, double);
template class DecodeState<double>;

}  // namespace prodlm::lm
