#include "prodlm/decode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "prodlm/datagen.hpp"

namespace prodlm {
namespace {

using State = lm::DecodeState<double>;
using Logits = lm::RowVec<double>;

Logits log_softmax(const Logits& logits) {
  const double max = logits.maxCoeff();
  const double lse = max + std::log((logits.array() - max).exp().sum());
  return (logits.array() - lse).matrix();
}

struct Beam {
  State state;
  Logits next;  // log-probabilities of the next token
  std::vector<TokenId> tokens;
  double logprob = 0.0;
};

Beam start_beam(const lm::Model<double>& model, const Vocab& vocab, std::string_view prompt) {
  std::vector<TokenId> ids = encode(vocab, prompt);
  if (ids.size() + 1 >= static_cast<std::size_t>(model.config.context_len)) {
    throw Error(ErrorCode::PromptTooLong, std::to_string(ids.size()) + " prompt tokens");
  }
  Beam beam{State(model.config), {}, {}, 0.0};
  Logits logits = beam.state.step(model, Vocab::kBos);
  for (TokenId t : ids) logits = beam.state.step(model, t);
  beam.next = log_softmax(logits);
  return beam;
}

Generation finish(const Vocab& vocab, std::vector<TokenId> tokens, double logprob, bool finished) {
  Generation g;
  g.text = decode_tokens(vocab, tokens);
  g.tokens = std::move(tokens);
  g.logprob = logprob;
  g.finished = finished;
  return g;
}

}  // namespace

double normalized_score(const Generation& g) {
  return g.tokens.empty() ? g.logprob : g.logprob / static_cast<double>(g.tokens.size());
}

Generation generate(const lm::Model<double>& model, const Vocab& vocab, std::string_view prompt,
                    int max_new, DecodeStrategy strategy) {
  if (strategy.beam_width > 1) {
    auto hyps = beam_search(model, vocab, prompt, strategy.beam_width, max_new);
    return hyps.empty() ? Generation{} : std::move(hyps.front());
  }
  Beam beam = start_beam(model, vocab, prompt);
  bool finished = false;
  for (int i = 0; i < max_new; ++i) {
    Eigen::Index best = 0;
    beam.next.maxCoeff(&best);
    const auto token = static_cast<TokenId>(best);
    beam.logprob += beam.next(best);
    beam.tokens.push_back(token);
    if (token == Vocab::kEos) {
      finished = true;
      break;
    }
    if (beam.state.length() >= model.config.context_len) break;
    beam.next = log_softmax(beam.state.step(model, token));
  }
  return finish(vocab, std::move(beam.tokens), beam.logprob, finished);
}

std::vector<Generation> beam_search(const lm::Model<double>& model, const Vocab& vocab,
                                    std::string_view prompt, int width, int max_new) {
  if (width < 1) throw Error(ErrorCode::InvalidArguments, "beam width must be >= 1");
  std::vector<Beam> alive;
  alive.push_back(start_beam(model, vocab, prompt));
  std::vector<Generation> done;

  struct Candidate {
    std::size_t parent;
    TokenId token;
    double logprob;
  };
  std::vector<Candidate> candidates;
  std::vector<Eigen::Index> order;

  for (int step = 0; step < max_new && !alive.empty(); ++step) {
    candidates.clear();
    for (std::size_t b = 0; b < alive.size(); ++b) {
      const auto& next = alive[b].next;
      order.resize(static_cast<std::size_t>(next.size()));
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      const auto top = std::min<std::size_t>(order.size(), static_cast<std::size_t>(width) + 1);
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                        [&next](Eigen::Index a, Eigen::Index c) {
                          return next(a) > next(c) || (next(a) == next(c) && a < c);
                        });
      for (std::size_t i = 0; i < top; ++i) {
        candidates.push_back({b, static_cast<TokenId>(order[i]), alive[b].logprob + next(order[i])});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& c) { return a.logprob > c.logprob; });

    std::vector<Beam> next_alive;
    for (std::size_t rank = 0; rank < candidates.size() && next_alive.size() < static_cast<std::size_t>(width);
         ++rank) {
      const auto& cand = candidates[rank];
      const Beam& parent = alive[cand.parent];
      std::vector<TokenId> tokens = parent.tokens;
      tokens.push_back(cand.token);
      if (cand.token == Vocab::kEos) {
        if (rank < static_cast<std::size_t>(width)) {
          done.push_back(finish(vocab, std::move(tokens), cand.logprob, true));
        }
        continue;
      }
      if (parent.state.length() >= model.config.context_len || step + 1 == max_new) {
        done.push_back(finish(vocab, std::move(tokens), cand.logprob, false));
        continue;
      }
      Beam child{parent.state, {}, std::move(tokens), cand.logprob};
      child.next = log_softmax(child.state.step(model, cand.token));
      next_alive.push_back(std::move(child));
    }
    alive = std::move(next_alive);
    if (done.size() >= static_cast<std::size_t>(width)) break;
  }
  for (auto& beam : alive) done.push_back(finish(vocab, std::move(beam.tokens), beam.logprob, false));

  std::stable_sort(done.begin(), done.end(), [](const Generation& a, const Generation& b) {
    return normalized_score(a) > normalized_score(b);
  });
  return done;
}

std::vector<std::string> extract_product_ids(std::string_view text) {
  std::vector<std::string> out;
  std::unordered_set<std::uint32_t> seen;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (auto id = match_product_id(text, i)) {
      if (seen.insert(id->value()).second) out.push_back(id->text());
      i += ProductId::kPrefix.size() + 7;
    }
  }
  return out;
}

std::vector<Recommendation> recommend_topk(const lm::Model<double>& model, const Vocab& vocab,
                                           const Catalog& catalog, std::string_view query, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArguments, "k must be >= 1");
  const auto hyps = beam_search(model, vocab, make_prompt(query), beam_width_for(k), kMaxNewTokens);
  std::vector<Recommendation> out;
  std::unordered_set<std::uint32_t> seen;
  for (const auto& h : hyps) {
    std::optional<ProductId> first;
    if (vocab.id_mode()) {
      for (TokenId t : h.tokens) {
        if ((first = vocab.product_of(t))) break;
      }
    } else {
      const auto ids = extract_product_ids(h.text);
      if (!ids.empty()) first = ProductId::parse(ids.front());
    }
    if (!first || !seen.insert(first->value()).second) continue;
    Recommendation rec;
    rec.rank = static_cast<int>(out.size()) + 1;
    rec.product_id = *first;
    rec.sequence_logprob = normalized_score(h);
    rec.response_text = h.text;
    rec.hallucinated = catalog.find(*first) == nullptr;
    out.push_back(std::move(rec));
    if (out.size() == static_cast<std::size_t>(k)) break;
  }
  if (out.empty()) throw Error(ErrorCode::NoRecommendation, "no beam named a product ID");
  return out;
}

}  // namespace prodlm
