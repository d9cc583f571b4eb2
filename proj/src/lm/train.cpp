#include "prodlm/lm/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

namespace prodlm::lm {

SftSequence make_sft_sequence(const Vocab& vocab, std::string_view prompt,
                              std::string_view response, int context_len) {
  std::vector<TokenId> prompt_tokens = encode(vocab, prompt);
  const std::vector<TokenId> response_tokens = encode(vocab, response);
  // Inputs are BOS + prompt + response; targets are the same shifted by one
  // with EOS appended, so the input length is 1 + |prompt| + |response|.
  const std::size_t limit = static_cast<std::size_t>(context_len);
  if (response_tokens.size() + 1 > limit) {
    throw Error(ErrorCode::SequenceTooLong, "response alone exceeds the context");
  }
  const std::size_t room = limit - 1 - response_tokens.size();
  if (prompt_tokens.size() > room) {
    prompt_tokens.erase(prompt_tokens.begin(),
                        prompt_tokens.begin() + static_cast<std::ptrdiff_t>(prompt_tokens.size() - room));
  }
  SftSequence seq;
  seq.inputs.push_back(Vocab::kBos);
  seq.inputs.insert(seq.inputs.end(), prompt_tokens.begin(), prompt_tokens.end());
  seq.inputs.insert(seq.inputs.end(), response_tokens.begin(), response_tokens.end());
  seq.targets.assign(seq.inputs.begin() + 1, seq.inputs.end());
  seq.targets.push_back(Vocab::kEos);
  seq.mask.assign(seq.targets.size(), 0);
  // Target i predicts inputs[i + 1]; the response starts at input index
  // 1 + |prompt|.
  for (std::size_t i = prompt_tokens.size(); i < seq.targets.size(); ++i) seq.mask[i] = 1;
  return seq;
}

void TrainHyperparameters::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidHyperparameters, why); };
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail("lr must be finite and >= 0");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (epochs <= 0) fail("epochs must be positive");
  if (weight_decay < 0.0) fail("weight_decay must be >= 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) fail("betas must be in [0, 1)");
  if (adam_eps <= 0.0) fail("adam_eps must be positive");
  if (warmup_frac < 0.0 || warmup_frac > 1.0) fail("warmup_frac must be in [0, 1]");
  if (min_lr_ratio < 0.0 || min_lr_ratio > 1.0) fail("min_lr_ratio must be in [0, 1]");
  if (grad_clip < 0.0) fail("grad_clip must be >= 0");
}

double learning_rate(const TrainHyperparameters& hp, int step, int total_steps) {
  const int warmup = static_cast<int>(std::round(hp.warmup_frac * total_steps));
  if (step < warmup) return hp.lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const int decay_steps = std::max(1, total_steps - warmup);
  const double progress = std::min(1.0, static_cast<double>(step - warmup) / decay_steps);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return hp.lr * (hp.min_lr_ratio + (1.0 - hp.min_lr_ratio) * cosine);
}

std::vector<double> TrainLog::losses(std::string_view split) const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r.loss);
  }
  return out;
}

namespace {

template <typename T>
bool is_matrix(const T& t) {
  return t.rows() > 1 && t.cols() > 1;
}

double global_norm(const Gradients<double>& grads) {
  double sq = 0.0;
  for_each_tensor([&sq](const std::string&, const auto& g) { sq += g.squaredNorm(); }, grads);
  return std::sqrt(sq);
}

}  // namespace

void adamw_step(Parameters<double>& params, const Gradients<double>& grads, AdamState& state,
                const TrainHyperparameters& hp, double lr) {
  ++state.t;
  const double bc1 = 1.0 - std::pow(hp.beta1, state.t);
  const double bc2 = 1.0 - std::pow(hp.beta2, state.t);
  for_each_tensor(
      [&](const std::string&, auto& p, const auto& g, auto& m, auto& v) {
        m = hp.beta1 * m + (1.0 - hp.beta1) * g;
        v = hp.beta2 * v + (1.0 - hp.beta2) * g.cwiseProduct(g);
        const double decay = is_matrix(p) ? hp.weight_decay : 0.0;
        p.array() -= lr * ((m.array() / bc1) / ((v.array() / bc2).sqrt() + hp.adam_eps) +
                           decay * p.array());
      },
      params, grads, state.m, state.v);
}

double mean_loss(const Model<double>& model, const std::vector<SftSequence>& sequences) {
  if (sequences.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : sequences) total += sft_loss(forward(model, s.inputs), s.targets, s.mask);
  return total / static_cast<double>(sequences.size());
}

TrainResult train_sft(Model<double> model, const DatasetSplit& dataset, const Vocab& vocab,
                      const TrainHyperparameters& hp, const ProgressFn& progress) {
  hp.validate();
  if (dataset.train.empty()) throw Error(ErrorCode::InvalidHyperparameters, "no training examples");
  if (static_cast<std::size_t>(model.config.vocab_size) != vocab.size()) {
    throw Error(ErrorCode::InvalidConfig, "model vocab_size does not match the vocabulary");
  }
  auto to_sequences = [&](const std::vector<TrainingExample>& examples) {
    std::vector<SftSequence> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) {
      out.push_back(make_sft_sequence(vocab, ex.prompt, ex.response, model.config.context_len));
    }
    return out;
  };
  const std::vector<SftSequence> train = to_sequences(dataset.train);
  const std::vector<SftSequence> val = to_sequences(dataset.val);

  const auto n = train.size();
  const auto batch = static_cast<std::size_t>(hp.batch_size);
  const int steps_per_epoch = static_cast<int>((n + batch - 1) / batch);
  const int total_steps = steps_per_epoch * hp.epochs;

  AdamState adam{zeros_like(model.params), zeros_like(model.params), 0};
  Gradients<double> grads = zeros_like(model.params);
  std::vector<std::size_t> order(n);
  std::vector<double> example_loss(n, 0.0);
  TrainLog log;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&start] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  auto record = [&](int step, std::string split, double loss, double lr) {
    log.records.push_back({step, std::move(split), loss, lr, elapsed_ms()});
    if (progress) progress(log.records.back());
  };

  int step = 0;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(hash64(hp.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < n; begin += batch, ++step) {
      const std::size_t end = std::min(n, begin + batch);
      const double weight = 1.0 / static_cast<double>(end - begin);
      for_each_tensor([](const std::string&, auto& g) { g.setZero(); }, grads);
      double batch_loss = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& s = train[order[i]];
        const double loss = accumulate_gradients(model, s.inputs, s.targets, s.mask, grads, weight);
        example_loss[order[i]] = loss;
        batch_loss += loss * weight;
      }
      if (hp.grad_clip > 0.0) {
        const double norm = global_norm(grads);
        if (norm > hp.grad_clip) {
          const double shrink = hp.grad_clip / norm;
          for_each_tensor([shrink](const std::string&, auto& g) { g *= shrink; }, grads);
        }
      }
      const double lr = learning_rate(hp, step, total_steps);
      adamw_step(model.params, grads, adam, hp, lr);
      record(step, "train", batch_loss, lr);
    }
    // Losses seen during the epoch, reduced in example order.
    const double epoch_loss =
        std::accumulate(example_loss.begin(), example_loss.end(), 0.0) / static_cast<double>(n);
    record(step - 1, "train_epoch", epoch_loss, learning_rate(hp, step - 1, total_steps));
    if (!val.empty()) {
      record(step - 1, "val", mean_loss(model, val), learning_rate(hp, step - 1, total_steps));
    }
  }
  return {std::move(model), std::move(log)};
}

}  // namespace prodlm::lm
