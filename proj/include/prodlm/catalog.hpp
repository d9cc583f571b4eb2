#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace prodlm {

/// Eight-digit product identifier, rendered in text as "ART-" + digits.
class ProductId {
 public:
  static constexpr std::uint32_t kLimit = 100'000'000;
  static constexpr std::string_view kPrefix = "ART-";

  constexpr ProductId() = default;
  explicit ProductId(std::uint32_t value);

  /// Accepts "ART-dddddddd" or bare "dddddddd"; anything else is nullopt.
  static std::optional<ProductId> parse(std::string_view text);

  std::uint32_t value() const { return value_; }
  std::string digits() const;
  std::string text() const;

  auto operator<=>(const ProductId&) const = default;

 private:
  std::uint32_t value_ = 0;
};

struct Dimensions {
  int width = 0;
  int depth = 0;
  int height = 0;
  bool operator==(const Dimensions&) const = default;
};

struct Product {
  ProductId product_id;
  std::string series_name;
  std::string category;
  std::int64_t price_cents = 0;
  std::vector<std::string> materials;
  std::vector<std::string> colors;
  Dimensions dimensions;
  std::string description;
  std::vector<std::string> benefits;
  std::vector<std::string> audiences;

  double price() const { return static_cast<double>(price_cents) / 100.0; }
  /// "499.99"
  std::string price_text() const;

  bool operator==(const Product&) const = default;
};

std::string format_price(std::int64_t cents);

/// Immutable product inventory with a total, injective ID index.
class Catalog {
 public:
  Catalog(std::vector<std::string> categories, std::vector<Product> products, std::uint64_t seed);

  const std::vector<std::string>& categories() const { return categories_; }
  const std::vector<Product>& products() const { return products_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return products_.size(); }

  /// nullptr when the ID is absent or malformed.
  const Product* find(ProductId id) const;
  const Product* lookup(std::string_view product_id) const;

  bool operator==(const Catalog& other) const {
    return seed_ == other.seed_ && categories_ == other.categories_ && products_ == other.products_;
  }

 private:
  std::vector<std::string> categories_;
  std::vector<Product> products_;
  std::uint64_t seed_;
  std::unordered_map<std::uint32_t, std::size_t> index_;
};

Catalog generate_catalog(std::uint64_t seed, int n_products, int n_categories);

/// Throws InvalidArguments describing the first violated invariant.
void validate_product(const Product& product, const std::vector<std::string>& categories);

// JSON Lines persistence: header {format_version, seed, categories,
// config_checksum} then one product per line.
inline constexpr int kCatalogFormatVersion = 1;

std::string serialize_catalog(const Catalog& catalog);
Catalog parse_catalog(std::string_view jsonl);
void write_catalog(const std::string& path, const Catalog& catalog);
Catalog read_catalog(const std::string& path);

/// FNV-1a of the serialized (file) bytes.
std::uint64_t catalog_checksum(const Catalog& catalog);

}  // namespace prodlm
