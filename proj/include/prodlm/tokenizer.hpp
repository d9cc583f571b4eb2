#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "prodlm/catalog.hpp"

namespace prodlm {

using TokenId = int;

/// Closed word-level vocabulary. Digits are always single tokens; in ID
/// mode every catalog product ID additionally owns one atomic token
/// appended after the base block.
class Vocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::string_view kSpecials[] = {"<pad>", "<bos>", "<eos>", "<unk>"};

  /// Builds from a full token list. Tokens past `base_size` must all be
  /// "ART-dddddddd" surface forms.
  Vocab(std::vector<std::string> tokens, std::size_t base_size, bool id_mode);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  std::size_t base_size() const { return base_size_; }
  bool id_mode() const { return id_mode_; }

  std::optional<TokenId> index_of(std::string_view token) const;
  std::optional<TokenId> id_token(ProductId id) const;
  /// The product behind an ID token, nullopt for base tokens.
  std::optional<ProductId> product_of(TokenId token) const;
  bool is_special(TokenId token) const { return token >= 0 && token < 4; }

  bool operator==(const Vocab& other) const {
    return base_size_ == other.base_size_ && id_mode_ == other.id_mode_ &&
           tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::size_t base_size_;
  bool id_mode_;
  std::unordered_map<std::string, TokenId> index_;
  std::unordered_map<std::uint32_t, TokenId> id_block_;
};

/// Standalone punctuation tokens.
inline constexpr std::string_view kPunctuation = ".,!?$-:";

/// Product ID surface form starting exactly at `pos`: "ART-" (any case)
/// plus 8 digits, not preceded by a letter/digit and not followed by one.
std::optional<ProductId> match_product_id(std::string_view text, std::size_t pos);

/// Lowercase, single-spaced text with ID surface forms in canonical
/// upper case. Canonical texts round-trip through encode/decode exactly.
std::string normalize_text(std::string_view text);

Vocab build_base_vocab(std::span<const std::string> corpus);
Vocab expand_with_product_ids(const Vocab& vocab, const Catalog& catalog);

std::vector<TokenId> encode(const Vocab& vocab, std::string_view text);
/// Drops pad/bos/eos; UNK renders as "<unk>" so encode(decode(x)) == x.
std::string decode_tokens(const Vocab& vocab, std::span<const TokenId> indices);

// Plain-text export: "VOCAB 1 <base_size> <id_mode>" then one token per line.
std::string serialize_vocab(const Vocab& vocab);
Vocab parse_vocab(std::string_view text);

}  // namespace prodlm
