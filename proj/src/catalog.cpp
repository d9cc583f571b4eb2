#include "prodlm/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "prodlm/error.hpp"
#include "prodlm/hash.hpp"
#include "prodlm/io.hpp"
#include "prodlm/lexicon.hpp"

namespace prodlm {

using json = nlohmann::ordered_json;

ProductId::ProductId(std::uint32_t value) : value_(value) {
  if (value >= kLimit) throw Error(ErrorCode::InvalidArguments, "product id exceeds 8 digits");
}

std::optional<ProductId> ProductId::parse(std::string_view text) {
  if (text.starts_with(kPrefix)) text.remove_prefix(kPrefix.size());
  if (text.size() != 8) return std::nullopt;
  std::uint32_t value = 0;
  for (char c : text) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + static_cast<std::uint32_t>(c - '0');
  }
  return ProductId(value);
}

std::string ProductId::digits() const {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08u", value_);
  return buf;
}

std::string ProductId::text() const { return std::string(kPrefix) + digits(); }

std::string format_price(std::int64_t cents) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%02lld", static_cast<long long>(cents / 100),
                static_cast<long long>(cents % 100));
  return buf;
}

std::string Product::price_text() const { return format_price(price_cents); }

Catalog::Catalog(std::vector<std::string> categories, std::vector<Product> products,
                 std::uint64_t seed)
    : categories_(std::move(categories)), products_(std::move(products)), seed_(seed) {
  index_.reserve(products_.size());
  for (std::size_t i = 0; i < products_.size(); ++i) {
    validate_product(products_[i], categories_);
    auto [it, inserted] = index_.emplace(products_[i].product_id.value(), i);
    if (!inserted) {
      throw Error(ErrorCode::InvalidArguments,
                  "duplicate product id " + products_[i].product_id.text());
    }
  }
}

const Product* Catalog::find(ProductId id) const {
  auto it = index_.find(id.value());
  return it == index_.end() ? nullptr : &products_[it->second];
}

const Product* Catalog::lookup(std::string_view product_id) const {
  auto id = ProductId::parse(product_id);
  return id ? find(*id) : nullptr;
}

void validate_product(const Product& p, const std::vector<std::string>& categories) {
  auto fail = [&p](const std::string& why) {
    throw Error(ErrorCode::InvalidArguments, p.product_id.text() + ": " + why);
  };
  if (p.price_cents <= 0) fail("price must be positive");
  if (p.dimensions.width <= 0 || p.dimensions.depth <= 0 || p.dimensions.height <= 0) {
    fail("dimensions must be positive");
  }
  if (std::find(categories.begin(), categories.end(), p.category) == categories.end()) {
    fail("category '" + p.category + "' not in catalog categories");
  }
  if (p.materials.empty()) fail("no materials");
  if (p.colors.empty()) fail("no colors");
  if (p.benefits.empty()) fail("no benefits");
  if (p.audiences.empty()) fail("no audiences");
}

namespace {

std::vector<std::string> pick_distinct(Rng& rng, std::span<const std::string_view> pool,
                                       std::size_t count) {
  std::vector<std::string_view> items(pool.begin(), pool.end());
  rng.shuffle(items);
  return {items.begin(), items.begin() + static_cast<std::ptrdiff_t>(count)};
}

std::string describe(const Product& p) {
  std::ostringstream out;
  out << "the " << p.series_name << " " << p.category << " in " << p.colors.front() << " "
      << p.materials.front() << ", " << p.dimensions.width << " x " << p.dimensions.depth
      << " x " << p.dimensions.height << " cm.";
  return out.str();
}

}  // namespace

Catalog generate_catalog(std::uint64_t seed, int n_products, int n_categories) {
  const auto category_pool = lexicon::categories();
  if (n_products <= 0 || n_categories <= 0 || n_categories > n_products ||
      static_cast<std::size_t>(n_categories) > category_pool.size()) {
    throw Error(ErrorCode::InvalidArguments,
                "need 0 < n_categories <= min(n_products, " +
                    std::to_string(category_pool.size()) + ")");
  }
  Rng rng(hash64(seed, "catalog"));
  std::vector<std::string> categories =
      pick_distinct(rng, category_pool, static_cast<std::size_t>(n_categories));

  // Prices are log-uniform over [9.99, 1999.00] and end in .99.
  const double log_lo = std::log(9.99);
  const double log_hi = std::log(1999.0);

  std::set<std::uint32_t> used_ids;
  std::vector<Product> products;
  products.reserve(static_cast<std::size_t>(n_products));
  for (int i = 0; i < n_products; ++i) {
    Product p;
    std::uint32_t id;
    do {
      id = static_cast<std::uint32_t>(rng.below(ProductId::kLimit));
    } while (!used_ids.insert(id).second);
    p.product_id = ProductId(id);
    p.category = categories[static_cast<std::size_t>(i % n_categories)];
    p.series_name = std::string(rng.pick(lexicon::series_names()));
    const double price = std::exp(log_lo + rng.uniform() * (log_hi - log_lo));
    p.price_cents = static_cast<std::int64_t>(std::floor(price)) * 100 + 99;
    p.materials = pick_distinct(rng, lexicon::materials(), 1 + rng.below(2));
    p.colors = pick_distinct(rng, lexicon::colors(), 1 + rng.below(2));
    p.dimensions = {static_cast<int>(20 + rng.below(221)), static_cast<int>(20 + rng.below(221)),
                    static_cast<int>(20 + rng.below(221))};
    p.benefits = pick_distinct(rng, lexicon::benefits(), 1 + rng.below(3));
    p.audiences = pick_distinct(rng, lexicon::audiences(), 1 + rng.below(2));
    p.description = describe(p);
    products.push_back(std::move(p));
  }
  return Catalog(std::move(categories), std::move(products), seed);
}

namespace {

json product_to_json(const Product& p) {
  json j;
  j["product_id"] = p.product_id.digits();
  j["series_name"] = p.series_name;
  j["category"] = p.category;
  j["price"] = p.price();
  j["materials"] = p.materials;
  j["colors"] = p.colors;
  j["dimensions"] = {{"width", p.dimensions.width},
                     {"depth", p.dimensions.depth},
                     {"height", p.dimensions.height}};
  j["description"] = p.description;
  j["benefits"] = p.benefits;
  j["audiences"] = p.audiences;
  return j;
}

Product product_from_json(const json& j) {
  Product p;
  auto id = ProductId::parse(j.at("product_id").get<std::string>());
  if (!id) throw Error(ErrorCode::FormatError, "malformed product_id");
  p.product_id = *id;
  p.series_name = j.at("series_name").get<std::string>();
  p.category = j.at("category").get<std::string>();
  p.price_cents = std::llround(j.at("price").get<double>() * 100.0);
  p.materials = j.at("materials").get<std::vector<std::string>>();
  p.colors = j.at("colors").get<std::vector<std::string>>();
  const auto& d = j.at("dimensions");
  p.dimensions = {d.at("width").get<int>(), d.at("depth").get<int>(), d.at("height").get<int>()};
  p.description = j.at("description").get<std::string>();
  p.benefits = j.at("benefits").get<std::vector<std::string>>();
  p.audiences = j.at("audiences").get<std::vector<std::string>>();
  return p;
}

std::uint64_t catalog_config_checksum(const Catalog& catalog) {
  return fnv1a64("catalog:" + std::to_string(catalog.seed()) + ":" +
                 std::to_string(catalog.size()) + ":" +
                 std::to_string(catalog.categories().size()));
}

}  // namespace

std::string serialize_catalog(const Catalog& catalog) {
  std::string out;
  json header;
  header["format_version"] = kCatalogFormatVersion;
  header["seed"] = catalog.seed();
  header["categories"] = catalog.categories();
  header["config_checksum"] = hex64(catalog_config_checksum(catalog));
  out += header.dump();
  out += '\n';
  for (const auto& p : catalog.products()) {
    out += product_to_json(p).dump();
    out += '\n';
  }
  return out;
}

Catalog parse_catalog(std::string_view jsonl) {
  std::istringstream in{std::string(jsonl)};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::FormatError, "empty catalog file");
  try {
    const json header = json::parse(line);
    if (header.at("format_version").get<int>() != kCatalogFormatVersion) {
      throw Error(ErrorCode::FormatError,
                  "unsupported catalog format_version " + header.at("format_version").dump());
    }
    auto categories = header.at("categories").get<std::vector<std::string>>();
    auto seed = header.at("seed").get<std::uint64_t>();
    std::vector<Product> products;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      products.push_back(product_from_json(json::parse(line)));
    }
    return Catalog(std::move(categories), std::move(products), seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("catalog json: ") + e.what());
  }
}

void write_catalog(const std::string& path, const Catalog& catalog) {
  write_file(path, serialize_catalog(catalog));
}

Catalog read_catalog(const std::string& path) { return parse_catalog(read_file(path)); }

std::uint64_t catalog_checksum(const Catalog& catalog) {
  return fnv1a64(serialize_catalog(catalog));
}

}  // namespace prodlm
