#include "prodlm/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "prodlm/error.hpp"

namespace prodlm {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_word_char(char c) { return (c >= 'a' && c <= 'z') || c == '\''; }
bool is_punct(char c) { return kPunctuation.find(c) != std::string_view::npos; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

enum class PieceKind { Word, Digit, Punct, ProductId, Unknown };

struct Piece {
  PieceKind kind;
  std::string text;
  ProductId id{};
};

// Splits lowercased text. ID surface forms are reported as one piece so
// that the caller decides between an atomic token and its decomposition.
// Decoded UNK tokens render as this literal so re-encoding is stable.
constexpr std::string_view kUnkText = Vocab::kSpecials[Vocab::kUnk];

std::vector<Piece> split_pieces(std::string_view raw) {
  std::vector<Piece> out;
  std::size_t i = 0;
  while (i < raw.size()) {
    const char c = lower(raw[i]);
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (raw.substr(i, kUnkText.size()) == kUnkText) {
      out.push_back({PieceKind::Unknown, std::string(kUnkText)});
      i += kUnkText.size();
    } else if (auto id = match_product_id(raw, i)) {
      out.push_back({PieceKind::ProductId, id->text(), *id});
      i += ProductId::kPrefix.size() + 8;
    } else if (is_word_char(c)) {
      std::size_t j = i;
      std::string word;
      while (j < raw.size() && is_word_char(lower(raw[j]))) word += lower(raw[j++]);
      out.push_back({PieceKind::Word, std::move(word)});
      i = j;
    } else if (is_digit(c)) {
      out.push_back({PieceKind::Digit, std::string(1, c)});
      ++i;
    } else if (is_punct(c)) {
      out.push_back({PieceKind::Punct, std::string(1, c)});
      ++i;
    } else {
      out.push_back({PieceKind::Unknown, std::string(1, c)});
      ++i;
    }
  }
  return out;
}

// "art", "-", then the eight digits.
void decompose_id(const Piece& piece, std::vector<std::string>& out) {
  out.emplace_back("art");
  out.emplace_back("-");
  for (char d : piece.id.digits()) out.emplace_back(1, d);
}

bool token_is_digit(std::string_view t) { return t.size() == 1 && is_digit(t[0]); }

}  // namespace

Vocab::Vocab(std::vector<std::string> tokens, std::size_t base_size, bool id_mode)
    : tokens_(std::move(tokens)), base_size_(base_size), id_mode_(id_mode) {
  if (tokens_.size() < 4 || base_size_ < 4 || base_size_ > tokens_.size()) {
    throw Error(ErrorCode::FormatError, "vocabulary too small");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (tokens_[i] != kSpecials[i]) throw Error(ErrorCode::FormatError, "specials must lead");
  }
  if (!id_mode_ && base_size_ != tokens_.size()) {
    throw Error(ErrorCode::FormatError, "base vocabulary carries extra tokens");
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error(ErrorCode::FormatError, "duplicate token '" + tokens_[i] + "'");
    }
    if (i >= base_size_) {
      auto id = ProductId::parse(tokens_[i]);
      if (!id || tokens_[i] != id->text()) {
        throw Error(ErrorCode::FormatError, "non-ID token in ID block: " + tokens_[i]);
      }
      id_block_.emplace(id->value(), static_cast<TokenId>(i));
    }
  }
}

std::optional<TokenId> Vocab::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<TokenId> Vocab::id_token(ProductId id) const {
  auto it = id_block_.find(id.value());
  if (it == id_block_.end()) return std::nullopt;
  return it->second;
}

std::optional<ProductId> Vocab::product_of(TokenId token) const {
  if (token < static_cast<TokenId>(base_size_) || token >= static_cast<TokenId>(size())) {
    return std::nullopt;
  }
  return ProductId::parse(tokens_[static_cast<std::size_t>(token)]);
}

std::optional<ProductId> match_product_id(std::string_view text, std::size_t pos) {
  constexpr std::size_t kLen = ProductId::kPrefix.size() + 8;
  if (pos + kLen > text.size()) return std::nullopt;
  if (pos > 0 && is_alnum(text[pos - 1])) return std::nullopt;
  for (std::size_t k = 0; k < 3; ++k) {
    if (lower(text[pos + k]) != lower(ProductId::kPrefix[k])) return std::nullopt;
  }
  if (text[pos + 3] != '-') return std::nullopt;
  if (pos + kLen < text.size() && is_alnum(text[pos + kLen])) return std::nullopt;
  return ProductId::parse(text.substr(pos + 4, 8));
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < text.size();) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      pending_space = !out.empty();
      ++i;
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    if (auto id = match_product_id(text, i)) {
      out += id->text();
      i += ProductId::kPrefix.size() + 8;
    } else {
      out += lower(text[i++]);
    }
  }
  return out;
}

Vocab build_base_vocab(std::span<const std::string> corpus) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot build a vocabulary from nothing");
  std::set<std::string> words;
  for (char d = '0'; d <= '9'; ++d) words.emplace(1, d);
  for (char p : kPunctuation) words.emplace(1, p);
  std::vector<std::string> pieces;
  for (const auto& text : corpus) {
    for (const auto& piece : split_pieces(text)) {
      switch (piece.kind) {
        case PieceKind::ProductId:
          pieces.clear();
          decompose_id(piece, pieces);
          words.insert(pieces.begin(), pieces.end());
          break;
        case PieceKind::Unknown: break;
        default: words.insert(piece.text);
      }
    }
  }
  std::vector<std::string> tokens(std::begin(Vocab::kSpecials), std::end(Vocab::kSpecials));
  tokens.insert(tokens.end(), words.begin(), words.end());
  const std::size_t base = tokens.size();
  return Vocab(std::move(tokens), base, false);
}

Vocab expand_with_product_ids(const Vocab& vocab, const Catalog& catalog) {
  if (vocab.id_mode()) throw Error(ErrorCode::AlreadyExpanded, "vocabulary already has ID tokens");
  std::vector<std::string> tokens = vocab.tokens();
  tokens.reserve(tokens.size() + catalog.size());
  for (const auto& p : catalog.products()) tokens.push_back(p.product_id.text());
  return Vocab(std::move(tokens), vocab.base_size(), true);
}

std::vector<TokenId> encode(const Vocab& vocab, std::string_view text) {
  std::vector<TokenId> out;
  std::vector<std::string> parts;
  auto emit = [&](std::string_view token) {
    out.push_back(vocab.index_of(token).value_or(Vocab::kUnk));
  };
  for (const auto& piece : split_pieces(text)) {
    switch (piece.kind) {
      case PieceKind::ProductId:
        if (auto token = vocab.id_mode() ? vocab.id_token(piece.id) : std::nullopt) {
          out.push_back(*token);
        } else {
          parts.clear();
          decompose_id(piece, parts);
          for (const auto& p : parts) emit(p);
        }
        break;
      case PieceKind::Unknown: out.push_back(Vocab::kUnk); break;
      default: emit(piece.text);
    }
  }
  return out;
}

std::string decode_tokens(const Vocab& vocab, std::span<const TokenId> indices) {
  std::vector<std::string_view> toks;
  toks.reserve(indices.size());
  for (TokenId t : indices) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab.size()) {
      throw Error(ErrorCode::IndexOutOfRange, "token " + std::to_string(t));
    }
    if (vocab.is_special(t) && t != Vocab::kUnk) continue;
    toks.push_back(vocab.tokens()[static_cast<std::size_t>(t)]);
  }
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const std::string_view cur = toks[i];
    if (i > 0) {
      const std::string_view prev = toks[i - 1];
      const bool decimal_point =
          prev == "." && i >= 2 && token_is_digit(toks[i - 2]) && token_is_digit(cur);
      const bool attached = (cur.size() == 1 && std::string_view(".,!?:").find(cur[0]) !=
                                                    std::string_view::npos) ||
                            prev == "$" || prev == "-" || cur == "-" ||
                            (token_is_digit(prev) && token_is_digit(cur)) || decimal_point;
      if (!attached) out += ' ';
    }
    // The decomposed ID prefix renders in its canonical surface form.
    if (cur == "art" && i + 2 < toks.size() && toks[i + 1] == "-" && token_is_digit(toks[i + 2])) {
      out += "ART";
    } else {
      out += cur;
    }
  }
  return out;
}

std::string serialize_vocab(const Vocab& vocab) {
  std::string out = "VOCAB 1 " + std::to_string(vocab.base_size()) + " " +
                    (vocab.id_mode() ? "1" : "0") + "\n";
  for (const auto& t : vocab.tokens()) out += t + "\n";
  return out;
}

Vocab parse_vocab(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic;
  int version = 0;
  std::size_t base = 0;
  int id_mode = 0;
  if (!(in >> magic >> version >> base >> id_mode) || magic != "VOCAB" || version != 1) {
    throw Error(ErrorCode::FormatError, "bad vocabulary header");
  }
  std::string line;
  std::getline(in, line);
  std::vector<std::string> tokens;
  while (std::getline(in, line)) {
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocab(std::move(tokens), base, id_mode != 0);
}

}  // namespace prodlm
