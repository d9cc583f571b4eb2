#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "prodlm/catalog.hpp"
#include "prodlm/datagen.hpp"
#include "prodlm/decode.hpp"
#include "prodlm/lm/checkpoint.hpp"

namespace prodlm {

/// Ranked IDs returned for one query (rank order, possibly empty).
struct Prediction {
  std::string query;
  ProductId gold;
  std::vector<ProductId> returned;
};

struct ExampleDetail {
  std::string query;
  ProductId gold;
  std::vector<ProductId> returned;
  std::vector<bool> hallucinated;
  bool top1 = false;
  bool top5 = false;
  bool top1_category = false;
  bool top5_category = false;
};

struct QuantReport {
  std::string label;
  bool id_mode = false;
  int k = 5;
  int n_examples = 0;
  double top1_match = 0.0;
  double top5_match = 0.0;
  double top1_category_match = 0.0;
  double top5_category_match = 0.0;
  double hallucination_rate = 0.0;
  std::int64_t n_recommendations = 0;
  std::int64_t n_hallucinated = 0;
  std::uint64_t catalog_checksum = 0;
  std::uint64_t config_checksum = 0;
  std::vector<ExampleDetail> details;
};

/// Metric computation shared by evaluation and the fuzz tests. IDs not in
/// the catalog count as hallucinated and never match an ID or a category.
QuantReport score_predictions(const std::vector<Prediction>& predictions, const Catalog& catalog,
                              int k);

/// Ordering and range violations, empty when the report is consistent.
std::vector<std::string> check_invariants(const QuantReport& report);

/// recommend_topk over every example. Throws CatalogMismatch when the
/// bundle or the examples were built from a different catalog.
QuantReport evaluate_quantitative(const lm::ModelBundle& bundle, const DatasetSplit& dataset,
                                  Split which, const Catalog& catalog, int k = 5);

struct JudgeVerdict {
  bool correct_series_name = false;
  bool correct_price = false;
  bool relevancy = false;
  bool added_new_information = false;
  bool correct_material = false;
  bool correct_color = false;

  bool operator==(const JudgeVerdict&) const = default;
};

/// Lexicon-grounded factual check of a sales response against the catalog
/// record of `claimed_id`.
JudgeVerdict judge_response(std::string_view response_text, std::string_view claimed_id,
                            const Catalog& catalog);

struct QualReport {
  std::string label;
  int n_examples = 0;
  double correct_series_name = 0.0;  // percentages in [0, 100]
  double correct_price = 0.0;
  double relevancy = 0.0;
  double added_new_information = 0.0;
  double correct_material = 0.0;
  double correct_color = 0.0;
  std::uint64_t catalog_checksum = 0;
  std::uint64_t config_checksum = 0;
};

struct JudgedText {
  std::string text;
  std::string claimed_id;
};

QualReport aggregate_verdicts(const std::vector<JudgeVerdict>& verdicts);

/// Judges the ground-truth responses themselves (oracle self-consistency).
QualReport judge_ground_truth(const std::vector<TrainingExample>& examples, const Catalog& catalog);

/// Greedy response per query, judged against the rank-1 recommended ID.
/// `quant` (from the same examples) supplies the rank-1 IDs when given.
QualReport evaluate_qualitative(const lm::ModelBundle& bundle, const DatasetSplit& dataset,
                                Split which, const Catalog& catalog,
                                const QuantReport* quant = nullptr);

struct ComparisonRow {
  std::string metric;
  double a = 0.0;
  double b = 0.0;
  double delta_points = 0.0;  // (a - b) × 100
};

struct Comparison {
  std::string label_a;
  std::string label_b;
  std::vector<ComparisonRow> rows;
};

/// Throws IncomparableRuns for different test sizes or catalogs.
Comparison compare_runs(const QuantReport& a, const QuantReport& b);

// Machine (JSON) and human (aligned table) renderings.
std::string quant_report_json(const QuantReport& report);
QuantReport parse_quant_report(std::string_view json_text);
std::string quant_details_jsonl(const QuantReport& report);
std::string qual_report_json(const QualReport& report);
std::string render_quant_table(const std::vector<QuantReport>& reports);
std::string render_qual_table(const QualReport& report);
std::string render_comparison(const Comparison& comparison);

}  // namespace prodlm

namespace prodlm {

/// Reference 7B-scale figures, shown as annotation rows next to desk runs.
/// Index 0 is the ID-token arm, index 1 the plain-tokenizer arm.
std::vector<QuantReport> reference_quant_reports();
QualReport reference_qual_report();

}  // namespace prodlm
