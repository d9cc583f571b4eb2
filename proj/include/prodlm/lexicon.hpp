#pragma once

#include <span>
#include <string>
#include <string_view>

// Fixed word lists shared by the catalog generator, the query/response
// templates and the judge. Attribute lexicons (categories, series names,
// materials, colors) are pairwise disjoint single lowercase words, and no
// template filler word belongs to any of them.
namespace prodlm::lexicon {

std::span<const std::string_view> categories();
std::span<const std::string_view> series_names();
std::span<const std::string_view> materials();
std::span<const std::string_view> colors();
std::span<const std::string_view> benefits();
std::span<const std::string_view> audiences();
std::span<const std::string_view> styles();
std::span<const std::string_view> rooms();
std::span<const std::string_view> adjectives();

enum class Kind { None, Category, Series, Material, Color };

/// Attribute kind of a single lowercase word.
Kind classify(std::string_view word);

/// "a" or "an" for the given noun phrase.
std::string_view article(std::string_view next_word);

}  // namespace prodlm::lexicon
