#include "prodlm/lexicon.hpp"

#include <algorithm>
#include <array>

namespace prodlm::lexicon {
namespace {

constexpr std::array<std::string_view, 30> kCategories = {
    "sofa",     "armchair",  "bookcase", "wardrobe",   "bed",      "desk",
    "chair",    "table",     "dresser",  "lamp",       "rug",      "mirror",
    "shelf",    "cabinet",   "stool",    "bench",      "ottoman",  "nightstand",
    "sideboard", "mattress", "curtain",  "cushion",    "crib",     "highchair",
    "clock",    "planter",   "basket",   "trolley",    "footstool", "headboard"};

constexpr std::array<std::string_view, 64> kSeries = {
    "askvik",   "borgholm", "dalsvik",  "ekeryd",   "fjallbo",  "gullsta",
    "hemvik",   "ingaro",   "jarnby",   "kallsjo",  "lidvik",   "morsta",
    "naesby",   "oddvik",   "pellsta",  "rundvik",  "sandby",   "tornvik",
    "ulvsta",   "vangby",   "yxsjo",    "alsta",    "brattby",  "dunvik",
    "ekholm",   "fagersta", "grankulla", "hallby",  "isberga",  "jonsvik",
    "krokby",   "lundsta",  "mellvik",  "norrby",   "ormsjo",   "prastby",
    "ronnvik",  "skogsta",  "tallby",   "udsvik",   "vallsta",  "aspby",
    "bergvik",  "dalby",    "eksta",    "forsvik",  "gransjo",  "holmby",
    "ivarsta",  "klintby",  "lervik",   "mossby",   "nasvik",   "orrsta",
    "pilvik",   "rodsta",   "solby",    "tjarnvik", "uppsta",   "vikby",
    "alvik",    "bjorksta", "dovik",    "elvsby"};

constexpr std::array<std::string_view, 16> kMaterials = {
    "oak",   "pine",    "birch",   "walnut",  "bamboo", "rattan",
    "steel", "aluminium", "glass", "linen",   "cotton", "wool",
    "leather", "velvet", "marble", "ceramic"};

constexpr std::array<std::string_view, 14> kColors = {
    "white", "black", "grey",  "beige", "blue",  "green", "red",
    "yellow", "pink", "brown", "navy",  "teal",  "cream", "anthracite"};

constexpr std::array<std::string_view, 20> kBenefits = {
    "easy assembly",        "easy cleaning",       "a space saving design",
    "a long lasting build", "extra storage",       "soft cushioning",
    "adjustable height",    "a foldable frame",    "a scratch resistant finish",
    "a removable cover",    "a water resistant coating", "a light weight",
    "modular parts",        "smooth wheels",       "hidden compartments",
    "low maintenance",      "rounded safe edges",  "a stackable design",
    "a quick setup",        "breathable fabric"};

constexpr std::array<std::string_view, 10> kAudiences = {
    "family", "student", "couple",    "senior",     "parent",
    "gamer",  "traveler", "artist",   "freelancer", "homeowner"};

constexpr std::array<std::string_view, 6> kStyles = {
    "minimalist", "scandinavian", "modern", "classic", "rustic", "industrial"};

constexpr std::array<std::string_view, 8> kRooms = {
    "living room", "bedroom", "office", "hallway",
    "kitchen",     "studio",  "balcony", "guest room"};

constexpr std::array<std::string_view, 7> kAdjectives = {
    "simple", "nice", "good", "new", "practical", "sturdy", "stylish"};

}  // namespace

std::span<const std::string_view> categories() { return kCategories; }
std::span<const std::string_view> series_names() { return kSeries; }
std::span<const std::string_view> materials() { return kMaterials; }
std::span<const std::string_view> colors() { return kColors; }
std::span<const std::string_view> benefits() { return kBenefits; }
std::span<const std::string_view> audiences() { return kAudiences; }
std::span<const std::string_view> styles() { return kStyles; }
std::span<const std::string_view> rooms() { return kRooms; }
std::span<const std::string_view> adjectives() { return kAdjectives; }

Kind classify(std::string_view word) {
  auto contains = [word](auto const& list) {
    return std::find(list.begin(), list.end(), word) != list.end();
  };
  if (contains(kCategories)) return Kind::Category;
  if (contains(kSeries)) return Kind::Series;
  if (contains(kMaterials)) return Kind::Material;
  if (contains(kColors)) return Kind::Color;
  return Kind::None;
}

std::string_view article(std::string_view next_word) {
  if (next_word.empty()) return "a";
  switch (next_word.front()) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return "an";
    default: return "a";
  }
}

}  // namespace prodlm::lexicon
