#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "prodlm/catalog.hpp"
#include "prodlm/lm/transformer.hpp"
#include "prodlm/tokenizer.hpp"

namespace prodlm {

struct DecodeStrategy {
  int beam_width = 1;  // 1 means greedy

  static DecodeStrategy greedy() { return {1}; }
  static DecodeStrategy beam(int width) { return {width}; }
};

struct Generation {
  std::string text;
  std::vector<TokenId> tokens;  // generated tokens, EOS included when emitted
  double logprob = 0.0;         // total over generated tokens
  bool finished = false;        // ended on EOS
};

inline constexpr int kMaxNewTokens = 96;

/// Continues `prompt` (already wrapped in the SFT template) until EOS or
/// `max_new` tokens.
Generation generate(const lm::Model<double>& model, const Vocab& vocab, std::string_view prompt,
                    int max_new, DecodeStrategy strategy = DecodeStrategy::greedy());

/// Every finished or truncated hypothesis of a beam search, best first by
/// length-normalized log-probability.
std::vector<Generation> beam_search(const lm::Model<double>& model, const Vocab& vocab,
                                    std::string_view prompt, int width, int max_new);

/// Length-normalized score used for ranking.
double normalized_score(const Generation& g);

/// "ART-" + 8 digits mentions, first-occurrence order, deduplicated.
std::vector<std::string> extract_product_ids(std::string_view text);

struct Recommendation {
  int rank = 0;
  ProductId product_id;
  double sequence_logprob = 0.0;  // length-normalized, <= 0
  std::string response_text;
  bool hallucinated = false;
};

/// Beam search of width max(2k, 8); each beam contributes its first ID,
/// duplicates keep the best score. Throws NoRecommendation when no beam
/// names a product.
std::vector<Recommendation> recommend_topk(const lm::Model<double>& model, const Vocab& vocab,
                                           const Catalog& catalog, std::string_view query, int k);

inline int beam_width_for(int k) { return std::max(2 * k, 8); }

}  // namespace prodlm
