#include "prodlm/datagen.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "prodlm/error.hpp"
#include "prodlm/hash.hpp"
#include "prodlm/io.hpp"
#include "prodlm/lexicon.hpp"

namespace prodlm {

using json = nlohmann::ordered_json;

std::string_view to_string(QueryType type) {
  switch (type) {
    case QueryType::Basic: return "basic";
    case QueryType::Complex: return "complex";
    case QueryType::ContextAudience: return "context_audience";
    case QueryType::Benefit: return "benefit";
    case QueryType::ContextNewAudience: return "context_new_audience";
  }
  return "unknown";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

const std::vector<TrainingExample>& DatasetSplit::split(Split which) const {
  switch (which) {
    case Split::Train: return train;
    case Split::Val: return val;
    case Split::Test: return test;
  }
  return train;
}

std::string make_prompt(std::string_view query) {
  return "Customer: " + std::string(query) + "\nAssistant:";
}

namespace {

// "a sofa", "an armchair"; an empty modifier is skipped.
std::string with_article(std::string_view modifier, std::string_view noun) {
  std::string phrase = modifier.empty() ? std::string(noun)
                                        : std::string(modifier) + " " + std::string(noun);
  return std::string(lexicon::article(phrase)) + " " + phrase;
}

std::string join_and(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += (i + 1 == items.size()) ? " and " : ", ";
    out += items[i];
  }
  return out;
}

std::int64_t round_up(std::int64_t value, std::int64_t step) {
  return (value / step + 1) * step;
}

std::uint64_t product_seed(std::uint64_t seed, const Product& product) {
  return hash64(seed, product.product_id.text());
}

// Attribute-bearing modifier used once a plain variant has collided.
std::string qualifier(Rng& rng, const Product& p, int attempt) {
  if (attempt < 3) {
    auto adjectives = lexicon::adjectives();
    return rng.below(3) == 0 ? std::string() : std::string(rng.pick(adjectives));
  }
  std::string color = rng.pick(p.colors);
  std::string material = rng.pick(p.materials);
  if (attempt < 6) return rng.below(2) == 0 ? color : material;
  std::string adjective(rng.pick(lexicon::adjectives()));
  return adjective + " " + color + " " + material;
}

QueryRecord basic_query(Rng& rng, const Product& p, int attempt) {
  const std::string q = qualifier(rng, p, attempt);
  const std::string room(rng.pick(lexicon::rooms()));
  const std::string& cat = p.category;
  std::string text;
  switch (rng.below(5)) {
    case 0: text = "looking for " + with_article(q, cat); break;
    case 1: text = (q.empty() ? cat : q + " " + cat) + " for my " + room; break;
    case 2: text = "i need " + with_article(q, cat); break;
    case 3: text = "where can i buy " + with_article(q, cat); break;
    default: text = (q.empty() ? cat : q + " " + cat) + " for the " + room; break;
  }
  return {p.product_id, QueryType::Basic, text, std::nullopt, ""};
}

QueryRecord complex_query(Rng& rng, const Product& p, int attempt) {
  const std::string& cat = p.category;
  const std::string style(rng.pick(lexicon::styles()));
  const std::string room(rng.pick(lexicon::rooms()));
  const std::string bound = "$" + std::to_string(round_up(p.price_cents / 100, 50));
  const std::string width = std::to_string(round_up(p.dimensions.width, 10));
  std::string text;
  std::string focus;
  switch (rng.below(3)) {
    case 0:
      focus = "price";
      switch (rng.below(3)) {
        case 0: text = style + " " + cat + " under " + bound; break;
        case 1: text = "affordable " + cat + " for less than " + bound; break;
        default: text = "looking for " + with_article("", cat) + " below " + bound + ", easy to build";
      }
      break;
    case 1:
      focus = "size";
      switch (rng.below(3)) {
        case 0: text = cat + " no wider than " + width + " cm"; break;
        case 1: text = "compact " + cat + " under " + width + " cm wide"; break;
        default: text = cat + " that fits in " + width + " cm for my " + room;
      }
      break;
    default:
      focus = "style:" + style;
      switch (rng.below(3)) {
        case 0: text = style + " " + cat + " that is easy to build"; break;
        case 1: text = cat + " with " + with_article(style, "design"); break;
        default: text = "i want " + with_article(style, cat) + " for my " + room;
      }
  }
  if (attempt >= 3) {
    text += focus == "price" ? ", no wider than " + width + " cm" : ", under " + bound;
    if (attempt >= 6) text = std::string(rng.pick(p.colors)) + " " + text;
  }
  return {p.product_id, QueryType::Complex, text, std::nullopt, focus};
}

QueryRecord audience_query(Rng& rng, const Product& p, QueryType type, int attempt) {
  std::string audience;
  if (type == QueryType::ContextAudience) {
    audience = rng.pick(p.audiences);
  } else {
    std::vector<std::string> fresh;
    for (auto a : lexicon::audiences()) {
      if (std::find(p.audiences.begin(), p.audiences.end(), a) == p.audiences.end()) {
        fresh.emplace_back(a);
      }
    }
    audience = rng.pick(fresh);
  }
  const std::string q = attempt < 3 ? std::string() : qualifier(rng, p, attempt);
  const std::string& cat = p.category;
  const std::string cat_phrase = q.empty() ? cat : q + " " + cat;
  const std::string room(rng.pick(lexicon::rooms()));
  const std::string who = with_article("", audience);
  std::string text;
  if (type == QueryType::ContextAudience) {
    switch (rng.below(4)) {
      case 0: text = cat_phrase + " for " + who; break;
      case 1: text = "what " + cat_phrase + " would suit " + who + "?"; break;
      case 2: text = "as " + who + " i need " + with_article(q, cat) + " for my " + room; break;
      default: text = "best " + cat_phrase + " for " + who + " on a budget";
    }
  } else {
    switch (rng.below(4)) {
      case 0: text = "i am shopping for " + who + ", any " + cat_phrase + " ideas?"; break;
      case 1: text = "gift idea for " + who + ": " + with_article(q, cat); break;
      case 2: text = cat_phrase + " that " + who + " would love"; break;
      default: text = "recommend " + with_article(q, cat) + " for " + who + " who just moved";
    }
  }
  if (attempt >= 3 && rng.below(2) == 0) text += " in the " + room;
  return {p.product_id, type, text, audience, ""};
}

QueryRecord benefit_query(Rng& rng, const Product& p, int attempt) {
  const std::string benefit = rng.pick(p.benefits);
  const std::string q = qualifier(rng, p, attempt);
  const std::string& cat = p.category;
  const std::string cat_phrase = q.empty() ? cat : q + " " + cat;
  const std::string room(rng.pick(lexicon::rooms()));
  std::string text;
  switch (rng.below(4)) {
    case 0: text = cat_phrase + " with " + benefit; break;
    case 1: text = "i want " + with_article(q, cat) + " that offers " + benefit; break;
    case 2: text = room + " " + cat_phrase + " with " + benefit; break;
    default: text = "any " + cat_phrase + " featuring " + benefit + "?";
  }
  return {p.product_id, QueryType::Benefit, text, std::nullopt, benefit};
}

std::uint64_t query_seed(std::uint64_t seed, const Product& p, QueryType type, int attempt) {
  return hash64(hash64(product_seed(seed, p), static_cast<std::uint64_t>(type)),
                static_cast<std::uint64_t>(attempt));
}

}  // namespace

QueryRecord generate_query(const Product& product, QueryType type, std::uint64_t seed,
                           int attempt) {
  Rng rng(query_seed(seed, product, type, attempt));
  switch (type) {
    case QueryType::Basic: return basic_query(rng, product, attempt);
    case QueryType::Complex: return complex_query(rng, product, attempt);
    case QueryType::Benefit: return benefit_query(rng, product, attempt);
    case QueryType::ContextAudience:
    case QueryType::ContextNewAudience: return audience_query(rng, product, type, attempt);
  }
  throw Error(ErrorCode::InvalidArguments, "unknown query type");
}

std::vector<QueryRecord> generate_queries(const Product& product, std::uint64_t seed) {
  std::vector<QueryRecord> out;
  out.reserve(5);
  for (QueryType type : kQueryTypes) out.push_back(generate_query(product, type, seed, 0));
  return out;
}

std::string generate_sales_response(const QueryRecord& query, const Product& p,
                                    std::uint64_t seed) {
  if (query.product_id != p.product_id) {
    throw Error(ErrorCode::MismatchedProduct,
                "query for " + query.product_id.text() + " paired with " + p.product_id.text());
  }
  Rng rng(hash64(hash64(seed, p.product_id.text()), query.text));
  const std::string head = p.product_id.text() + ", the " + p.series_name + " " + p.category;
  std::string text;
  switch (rng.below(4)) {
    case 0: text = "i recommend " + head + "."; break;
    case 1: text = "take a look at " + head + "."; break;
    case 2: text = "you will like " + head + "."; break;
    default: text = "a great match is " + head + ".";
  }
  const std::string materials = join_and(p.materials);
  const std::string colors = join_and(p.colors);
  text += rng.below(2) == 0 ? " it is made of " + materials + " and comes in " + colors + "."
                            : " made of " + materials + ", it comes in " + colors + ".";
  text += rng.below(2) == 0 ? " it costs $" + p.price_text() + "."
                            : " the price is $" + p.price_text() + ".";
  if (rng.below(2) == 0) {
    text += " it measures " + std::to_string(p.dimensions.width) + " x " +
            std::to_string(p.dimensions.depth) + " x " + std::to_string(p.dimensions.height) +
            " cm.";
  }
  const std::string benefit = rng.pick(p.benefits);
  switch (query.query_type) {
    case QueryType::Basic:
      text += " it is a solid everyday pick with " + benefit + ".";
      break;
    case QueryType::Complex:
      if (query.focus == "price") {
        text += " it stays within your budget and offers " + benefit + ".";
      } else if (query.focus == "size") {
        text += " it fits your space and offers " + benefit + ".";
      } else {
        const std::string style = query.focus.substr(query.focus.find(':') + 1);
        text += " it suits " + with_article(style, "interior") + " and offers " + benefit + ".";
      }
      break;
    case QueryType::ContextAudience:
      text += " it is ideal for " + with_article("", query.audience.value_or("family")) +
              " because it offers " + benefit + ".";
      break;
    case QueryType::Benefit:
      text += " it gives you " + query.focus + ", just as you asked.";
      break;
    case QueryType::ContextNewAudience:
      text += " it also suits " + with_article("", query.audience.value_or("family")) +
              " thanks to " + benefit + ".";
      break;
  }
  return text;
}

DatasetSplit build_dataset(const Catalog& catalog, std::uint64_t seed) {
  if (catalog.size() == 0) throw Error(ErrorCode::InvalidArguments, "empty catalog");
  DatasetSplit out;
  out.seed = seed;
  out.catalog_checksum = catalog_checksum(catalog);
  out.train.reserve(3 * catalog.size());
  out.val.reserve(catalog.size());
  out.test.reserve(catalog.size());

  // Collisions are resolved in catalog order, so the result does not depend
  // on how the per-product generation was scheduled.
  constexpr int kMaxAttempts = 64;
  std::set<std::string> seen;
  for (const Product& p : catalog.products()) {
    std::vector<TrainingExample> examples;
    examples.reserve(5);
    for (QueryType type : kQueryTypes) {
      QueryRecord query = generate_query(p, type, seed, 0);
      int attempt = 0;
      while (!seen.insert(query.text).second) {
        if (++attempt == kMaxAttempts) {
          throw Error(ErrorCode::InvalidArguments,
                      "cannot find a unique query for " + p.product_id.text());
        }
        query = generate_query(p, type, seed, attempt);
      }
      TrainingExample ex;
      ex.prompt = make_prompt(query.text);
      ex.response = generate_sales_response(query, p, seed);
      ex.target_product_id = p.product_id;
      ex.query_type = type;
      ex.query = query.text;
      examples.push_back(std::move(ex));
    }
    Rng rng(hash64(product_seed(seed, p), "split"));
    rng.shuffle(examples);
    for (std::size_t i = 0; i < examples.size(); ++i) {
      auto& ex = examples[i];
      ex.split = i < 3 ? Split::Train : (i == 3 ? Split::Val : Split::Test);
      (i < 3 ? out.train : (i == 3 ? out.val : out.test)).push_back(std::move(ex));
    }
  }
  return out;
}

namespace {

std::uint64_t dataset_config_checksum(const DatasetSplit& d) {
  return fnv1a64("dataset:" + std::to_string(d.seed) + ":" + hex64(d.catalog_checksum));
}

}  // namespace

std::string serialize_split(const DatasetSplit& dataset, Split which) {
  json header;
  header["format_version"] = kDatasetFormatVersion;
  header["seed"] = dataset.seed;
  header["catalog_checksum"] = hex64(dataset.catalog_checksum);
  header["config_checksum"] = hex64(dataset_config_checksum(dataset));
  header["split"] = to_string(which);
  std::string out = header.dump() + "\n";
  for (const auto& ex : dataset.split(which)) {
    json j;
    j["prompt"] = ex.prompt;
    j["response"] = ex.response;
    j["target_product_id"] = ex.target_product_id.text();
    j["split"] = to_string(ex.split);
    j["query_type"] = static_cast<int>(ex.query_type);
    j["query"] = ex.query;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const std::string& dir, const DatasetSplit& dataset) {
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    write_file(dir + "/" + std::string(to_string(s)) + ".jsonl", serialize_split(dataset, s));
  }
}

DatasetSplit read_dataset(const std::string& dir) {
  DatasetSplit out;
  bool first = true;
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    const std::string path = dir + "/" + std::string(to_string(s)) + ".jsonl";
    std::istringstream in(read_file(path));
    std::string line;
    try {
      if (!std::getline(in, line)) throw Error(ErrorCode::FormatError, "empty " + path);
      const json header = json::parse(line);
      if (header.at("format_version").get<int>() != kDatasetFormatVersion) {
        throw Error(ErrorCode::FormatError, "unsupported dataset format_version in " + path);
      }
      const auto seed = header.at("seed").get<std::uint64_t>();
      const auto checksum = parse_hex64(header.at("catalog_checksum").get<std::string>());
      if (first) {
        out.seed = seed;
        out.catalog_checksum = checksum;
        first = false;
      } else if (seed != out.seed || checksum != out.catalog_checksum) {
        throw Error(ErrorCode::CatalogMismatch, "dataset split headers disagree: " + path);
      }
      auto& target = s == Split::Train ? out.train : (s == Split::Val ? out.val : out.test);
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        TrainingExample ex;
        ex.prompt = j.at("prompt").get<std::string>();
        ex.response = j.at("response").get<std::string>();
        auto id = ProductId::parse(j.at("target_product_id").get<std::string>());
        if (!id) throw Error(ErrorCode::FormatError, "bad target_product_id in " + path);
        ex.target_product_id = *id;
        ex.split = s;
        const int type = j.at("query_type").get<int>();
        if (type < 1 || type > 5) throw Error(ErrorCode::FormatError, "bad query_type");
        ex.query_type = static_cast<QueryType>(type);
        ex.query = j.at("query").get<std::string>();
        target.push_back(std::move(ex));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, path + ": " + e.what());
    }
  }
  return out;
}

}  // namespace prodlm
