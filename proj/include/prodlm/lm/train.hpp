#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "prodlm/datagen.hpp"
#include "prodlm/lm/transformer.hpp"
#include "prodlm/tokenizer.hpp"

namespace prodlm::lm {

/// One supervised sequence: inputs, next-token targets and the loss mask
/// (1 on response tokens and the closing EOS).
struct SftSequence {
  std::vector<TokenId> inputs;
  std::vector<TokenId> targets;
  std::vector<std::uint8_t> mask;
};

/// BOS + prompt + response + EOS, shifted by one. Prompts that do not fit
/// lose tokens from their left end; a response that cannot fit throws
/// SequenceTooLong.
SftSequence make_sft_sequence(const Vocab& vocab, std::string_view prompt,
                              std::string_view response, int context_len);

struct TrainHyperparameters {
  double lr = 3e-4;
  int batch_size = 16;
  int epochs = 30;
  double weight_decay = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double adam_eps = 1e-8;
  double warmup_frac = 0.05;
  double min_lr_ratio = 0.1;
  double grad_clip = 1.0;  // global L2 norm, 0 disables
  std::uint64_t seed = 0;

  /// Throws InvalidHyperparameters.
  void validate() const;
  bool operator==(const TrainHyperparameters&) const = default;
};

/// Linear warmup then cosine decay to min_lr_ratio × lr.
double learning_rate(const TrainHyperparameters& hp, int step, int total_steps);

struct TrainRecord {
  int step = 0;
  std::string split;  // "train" per step; "train_epoch" and "val" per epoch
  double loss = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;
};

struct TrainLog {
  std::vector<TrainRecord> records;

  std::vector<double> losses(std::string_view split) const;
};

/// AdamW moments, same shapes as the parameters.
struct AdamState {
  Parameters<double> m;
  Parameters<double> v;
  int t = 0;
};

/// One decoupled-weight-decay Adam update. Matrices decay; gains and biases
/// do not.
void adamw_step(Parameters<double>& params, const Gradients<double>& grads, AdamState& state,
                const TrainHyperparameters& hp, double lr);

/// Mean masked loss of one example set; examples are summed in index order.
double mean_loss(const Model<double>& model, const std::vector<SftSequence>& sequences);

struct TrainResult {
  Model<double> model;
  TrainLog log;
};

using ProgressFn = std::function<void(const TrainRecord&)>;

/// Full fine-tuning on dataset.train with per-epoch validation on
/// dataset.val. Deterministic given hp.seed.
TrainResult train_sft(Model<double> model, const DatasetSplit& dataset, const Vocab& vocab,
                      const TrainHyperparameters& hp, const ProgressFn& progress = {});

}  // namespace prodlm::lm
