#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "prodlm/lm/train.hpp"
#include "prodlm/lm/transformer.hpp"

namespace prodlm {

/// One experiment arm. Parsed from a sectioned key = value file:
///
///   [run]      seed, id_mode (required), label
///   [catalog]  n_products, n_categories
///   [model]    n_layers, n_heads, d_model, d_ff, context_len, new_token_noise
///   [train]    lr, batch_size, epochs, weight_decay, beta1, beta2, adam_eps,
///              warmup_frac, min_lr_ratio, grad_clip
///   [eval]     k, split
///   [paths]    out_dir, catalog, dataset_dir, checkpoint, report_dir
///
/// Relative paths resolve against the config file's directory; catalog,
/// dataset_dir, checkpoint and report_dir default to locations under out_dir.
struct RunConfig {
  std::uint64_t seed = 0;
  bool id_mode = false;
  std::string label;

  int n_products = 32;
  int n_categories = 4;

  lm::ModelConfig model;  // vocab_size is fixed later by the vocabulary
  double new_token_noise = 0.02;

  lm::TrainHyperparameters train;

  int k = 5;
  std::string eval_split = "test";

  std::string out_dir;
  std::string catalog_path;
  std::string dataset_dir;
  std::string checkpoint_path;
  std::string report_dir;

  /// FNV-1a over every setting that affects results (paths excluded).
  std::uint64_t checksum() const;
  /// Replaces out_dir and re-derives the paths that were defaulted from it.
  void set_out_dir(const std::string& dir);
  /// Throws InvalidConfig; creates out_dir and checks it is writable.
  void validate() const;
  std::string canonical() const;

 private:
  friend RunConfig parse_run_config(std::string_view, const std::string&);
  bool catalog_defaulted_ = true;
  bool dataset_defaulted_ = true;
  bool checkpoint_defaulted_ = true;
  bool report_defaulted_ = true;
  void derive_paths();
};

/// `base_dir` anchors relative paths. Throws InvalidConfig.
RunConfig parse_run_config(std::string_view text, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

}  // namespace prodlm
