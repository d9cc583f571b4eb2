#pragma once

// Single-fact edits of a sales text, written against the catalog record
// and the lexicons only, never through the judge they are used to test.

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "prodlm/catalog.hpp"
#include "prodlm/eval.hpp"
#include "prodlm/lexicon.hpp"

namespace prodlm::testing {

enum class Perturbation { Price, Material, Color, Series, Category };

inline constexpr Perturbation kPerturbations[] = {Perturbation::Price, Perturbation::Material,
                                                  Perturbation::Color, Perturbation::Series,
                                                  Perturbation::Category};

inline const char* name(Perturbation p) {
  switch (p) {
    case Perturbation::Price: return "price";
    case Perturbation::Material: return "material";
    case Perturbation::Color: return "color";
    case Perturbation::Series: return "series";
    case Perturbation::Category: return "category";
  }
  return "?";
}

inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Replaces every whole-word occurrence; returns the count.
inline int replace_word(std::string& text, const std::string& from, const std::string& to) {
  int n = 0;
  for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos)) {
    const bool left = pos == 0 || !is_word_char(text[pos - 1]);
    const bool right = pos + from.size() == text.size() || !is_word_char(text[pos + from.size()]);
    if (left && right) {
      text.replace(pos, from.size(), to);
      pos += to.size();
      ++n;
    } else {
      pos += from.size();
    }
  }
  return n;
}

inline bool mentions(const std::string& text, const std::string& word) {
  std::string copy = text;
  return replace_word(copy, word, word) > 0;
}

// First lexicon entry that is absent from `own` and not already mentioned.
inline std::optional<std::string> foreign(std::span<const std::string_view> lexicon,
                                          const std::vector<std::string>& own,
                                          const std::string& text) {
  for (auto w : lexicon) {
    const std::string s(w);
    if (std::find(own.begin(), own.end(), s) == own.end() && !mentions(text, s)) return s;
  }
  return std::nullopt;
}

inline std::optional<std::string> swap_first_of(std::string text, const std::vector<std::string>& own,
                                                std::span<const std::string_view> lexicon) {
  for (const auto& w : own) {
    if (!mentions(text, w)) continue;
    const auto other = foreign(lexicon, own, text);
    if (!other) return std::nullopt;
    replace_word(text, w, *other);
    return text;
  }
  return std::nullopt;
}

/// nullopt when the text does not carry the fact to edit.
inline std::optional<std::string> perturb(const std::string& text, const Product& p, Perturbation kind) {
  switch (kind) {
    case Perturbation::Price: {
      static const std::regex re(R"(\$\d+\.\d\d)");
      std::smatch m;
      if (!std::regex_search(text, m, re)) return std::nullopt;
      const std::int64_t other = p.price_cents + 100;
      return m.prefix().str() + "$" + format_price(other) + m.suffix().str();
    }
    case Perturbation::Material: return swap_first_of(text, p.materials, lexicon::materials());
    case Perturbation::Color: return swap_first_of(text, p.colors, lexicon::colors());
    case Perturbation::Series: return swap_first_of(text, {p.series_name}, lexicon::series_names());
    case Perturbation::Category: return swap_first_of(text, {p.category}, lexicon::categories());
  }
  return std::nullopt;
}

/// The verdict a perturbed ground-truth text must receive: the target field
/// flips to false; added_new_information turns true when the edit brings in
/// a foreign attribute value (everything except the category noun).
inline JudgeVerdict expected_after(Perturbation kind) {
  JudgeVerdict v{true, true, true, false, true, true};
  switch (kind) {
    case Perturbation::Price: v.correct_price = false; v.added_new_information = true; break;
    case Perturbation::Material: v.correct_material = false; v.added_new_information = true; break;
    case Perturbation::Color: v.correct_color = false; v.added_new_information = true; break;
    case Perturbation::Series: v.correct_series_name = false; v.added_new_information = true; break;
    case Perturbation::Category: v.relevancy = false; break;
  }
  return v;
}

}  // namespace prodlm::testing
