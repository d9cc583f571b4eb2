#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prodlm/catalog.hpp"

namespace prodlm {

enum class QueryType : int {
  Basic = 1,
  Complex = 2,
  ContextAudience = 3,
  Benefit = 4,
  ContextNewAudience = 5,
};

inline constexpr QueryType kQueryTypes[] = {QueryType::Basic, QueryType::Complex,
                                            QueryType::ContextAudience, QueryType::Benefit,
                                            QueryType::ContextNewAudience};

std::string_view to_string(QueryType type);

struct QueryRecord {
  ProductId product_id;
  QueryType query_type = QueryType::Basic;
  std::string text;
  /// Present exactly for the two contextual types.
  std::optional<std::string> audience;
  /// What the response should address: the benefit for Benefit queries,
  /// "price"/"size"/"style:<word>" for Complex queries, empty otherwise.
  std::string focus;
};

enum class Split { Train, Val, Test };
std::string_view to_string(Split split);

struct TrainingExample {
  std::string prompt;
  std::string response;
  ProductId target_product_id;
  Split split = Split::Train;
  QueryType query_type = QueryType::Basic;
  std::string query;

  bool operator==(const TrainingExample&) const = default;
};

struct DatasetSplit {
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> val;
  std::vector<TrainingExample> test;
  std::uint64_t seed = 0;
  std::uint64_t catalog_checksum = 0;

  const std::vector<TrainingExample>& split(Split which) const;
  bool operator==(const DatasetSplit&) const = default;
};

/// "Customer: <query>\nAssistant:"
std::string make_prompt(std::string_view query);

std::vector<QueryRecord> generate_queries(const Product& product, std::uint64_t seed);

/// One query of the given type. Attempts above zero draw progressively more
/// specific variants; build_dataset uses them to keep query texts unique.
QueryRecord generate_query(const Product& product, QueryType type, std::uint64_t seed,
                           int attempt);

std::string generate_sales_response(const QueryRecord& query, const Product& product,
                                    std::uint64_t seed);

DatasetSplit build_dataset(const Catalog& catalog, std::uint64_t seed);

inline constexpr int kDatasetFormatVersion = 1;

std::string serialize_split(const DatasetSplit& dataset, Split which);
/// Writes train.jsonl, val.jsonl and test.jsonl into `dir`.
void write_dataset(const std::string& dir, const DatasetSplit& dataset);
/// Rejects files whose headers disagree with each other.
DatasetSplit read_dataset(const std::string& dir);

}  // namespace prodlm
