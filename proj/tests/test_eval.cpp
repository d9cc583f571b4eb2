#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "perturb.hpp"
#include "prodlm/catalog.hpp"
#include "prodlm/datagen.hpp"
#include "prodlm/error.hpp"
#include "prodlm/eval.hpp"
#include "prodlm/hash.hpp"

using namespace prodlm;
using prodlm::testing::Perturbation;

namespace {

const Catalog& desk() {
  static const Catalog c = generate_catalog(7, 32, 4);
  return c;
}

// Products of the desk catalog grouped by category.
std::vector<std::vector<ProductId>> by_category(const Catalog& c) {
  std::vector<std::vector<ProductId>> out(c.categories().size());
  for (const auto& p : c.products()) {
    const auto it = std::find(c.categories().begin(), c.categories().end(), p.category);
    out[static_cast<std::size_t>(it - c.categories().begin())].push_back(p.product_id);
  }
  return out;
}

ProductId absent_id(const Catalog& c, std::uint32_t start = 1) {
  ProductId id(start);
  while (c.find(id)) id = ProductId(id.value() + 1);
  return id;
}

// Brute-force metric oracle straight from the definitions.
struct Expected {
  double top1 = 0, top5 = 0, cat1 = 0, cat5 = 0, halluc = 0;
};

Expected brute_force(const std::vector<Prediction>& ps, const Catalog& c, std::size_t k) {
  Expected e;
  double recs = 0, bad = 0;
  for (const auto& p : ps) {
    const std::string gold_cat = c.find(p.gold)->category;
    const std::size_t n = std::min(k, p.returned.size());
    bool hit5 = false, cat5 = false;
    for (std::size_t i = 0; i < n; ++i) {
      const Product* r = c.find(p.returned[i]);
      recs += 1;
      if (!r) bad += 1;
      const bool exact = p.returned[i] == p.gold;
      const bool cat = r && r->category == gold_cat;
      if (i == 0) {
        e.top1 += exact;
        e.cat1 += cat;
      }
      hit5 = hit5 || exact;
      cat5 = cat5 || cat;
    }
    e.top5 += hit5;
    e.cat5 += cat5;
  }
  const double n = static_cast<double>(ps.size());
  e.top1 /= n;
  e.top5 /= n;
  e.cat1 /= n;
  e.cat5 /= n;
  e.halluc = recs > 0 ? bad / recs : 0.0;
  return e;
}

std::vector<Prediction> random_predictions(Rng& rng, const Catalog& c) {
  std::vector<Prediction> ps(1 + rng.below(40));
  for (auto& p : ps) {
    p.query = "q" + std::to_string(rng.below(1000000));
    p.gold = c.products()[rng.below(c.size())].product_id;
    const auto n = rng.below(8);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto roll = rng.below(10);
      ProductId id = roll == 0   ? ProductId(static_cast<std::uint32_t>(rng.below(ProductId::kLimit)))
                     : roll == 1 ? p.gold
                                 : c.products()[rng.below(c.size())].product_id;
      if (std::find(p.returned.begin(), p.returned.end(), id) == p.returned.end()) {
        p.returned.push_back(id);
      }
    }
  }
  return ps;
}

}  // namespace

TEST(Score, PerfectPredictions) {
  std::vector<Prediction> ps;
  for (const auto& p : desk().products()) ps.push_back({"q", p.product_id, {p.product_id}});
  const auto r = score_predictions(ps, desk(), 5);
  EXPECT_EQ(r.n_examples, 32);
  EXPECT_EQ(r.top1_match, 1.0);
  EXPECT_EQ(r.top5_match, 1.0);
  EXPECT_EQ(r.top1_category_match, 1.0);
  EXPECT_EQ(r.top5_category_match, 1.0);
  EXPECT_EQ(r.hallucination_rate, 0.0);
  EXPECT_TRUE(check_invariants(r).empty());
}

TEST(Score, FourExampleHandCase) {
  const auto cats = by_category(desk());
  const auto& A = cats[0];
  const auto& B = cats[1];
  // Gold categories {A, A, B, B}; rank-1 = gold, same-category wrong ID,
  // other-category ID, gold.
  const std::vector<Prediction> ps = {
      {"q1", A[0], {A[0]}},
      {"q2", A[1], {A[2]}},
      {"q3", B[0], {A[3]}},
      {"q4", B[1], {B[1]}},
  };
  const auto r = score_predictions(ps, desk(), 5);
  EXPECT_DOUBLE_EQ(r.top1_match, 0.5);
  EXPECT_DOUBLE_EQ(r.top1_category_match, 0.75);
  EXPECT_DOUBLE_EQ(r.top5_match, 0.5);
  EXPECT_DOUBLE_EQ(r.top5_category_match, 0.75);
  ASSERT_EQ(r.details.size(), 4u);
  EXPECT_TRUE(r.details[0].top1);
  EXPECT_FALSE(r.details[1].top1);
  EXPECT_TRUE(r.details[1].top1_category);
  EXPECT_FALSE(r.details[2].top1_category);
}

TEST(Score, HallucinatedIdsNeverMatchButCount) {
  const auto& p = desk().products()[0];
  const ProductId fake = absent_id(desk());
  const std::vector<Prediction> ps = {{"q", p.product_id, {fake, p.product_id}},
                                      {"r", p.product_id, {}}};
  const auto r = score_predictions(ps, desk(), 5);
  EXPECT_EQ(r.top1_match, 0.0);
  EXPECT_EQ(r.top1_category_match, 0.0);
  EXPECT_EQ(r.top5_match, 0.5);
  EXPECT_EQ(r.n_recommendations, 2);
  EXPECT_EQ(r.n_hallucinated, 1);
  EXPECT_DOUBLE_EQ(r.hallucination_rate, 0.5);
  EXPECT_EQ(r.details[0].hallucinated, (std::vector<bool>{true, false}));
}

TEST(Score, OnlyFirstKCount) {
  const auto cats = by_category(desk());
  const Prediction p{"q", cats[0][0], {cats[1][0], cats[1][1], cats[1][2], cats[0][0]}};
  EXPECT_EQ(score_predictions({p}, desk(), 3).top5_match, 0.0);
  EXPECT_EQ(score_predictions({p}, desk(), 4).top5_match, 1.0);
}

TEST(Score, FuzzedInvariantsAndOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto ps = random_predictions(rng, desk());
    const auto r = score_predictions(ps, desk(), 5);
    ASSERT_TRUE(check_invariants(r).empty()) << "trial " << trial;
    const auto e = brute_force(ps, desk(), 5);
    ASSERT_NEAR(r.top1_match, e.top1, 1e-12);
    ASSERT_NEAR(r.top5_match, e.top5, 1e-12);
    ASSERT_NEAR(r.top1_category_match, e.cat1, 1e-12);
    ASSERT_NEAR(r.top5_category_match, e.cat5, 1e-12);
    ASSERT_NEAR(r.hallucination_rate, e.halluc, 1e-12);
  }
}

TEST(Score, OrderIndependence) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto ps = random_predictions(rng, desk());
    const auto a = score_predictions(ps, desk(), 5);
    rng.shuffle(ps);
    const auto b = score_predictions(ps, desk(), 5);
    EXPECT_EQ(a.top1_match, b.top1_match);
    EXPECT_EQ(a.top5_match, b.top5_match);
    EXPECT_EQ(a.top1_category_match, b.top1_category_match);
    EXPECT_EQ(a.top5_category_match, b.top5_category_match);
    EXPECT_EQ(a.hallucination_rate, b.hallucination_rate);
  }
}

TEST(Invariants, DetectViolations) {
  QuantReport r;
  r.n_examples = 10;
  r.top1_match = 0.6;
  r.top5_match = 0.5;
  r.top1_category_match = 0.7;
  r.top5_category_match = 0.9;
  EXPECT_FALSE(check_invariants(r).empty());
  r.top5_match = 0.65;
  EXPECT_TRUE(check_invariants(r).empty());
  r.top1_category_match = 0.55;  // exact above category
  EXPECT_FALSE(check_invariants(r).empty());
  r.top1_category_match = 0.95;  // category top-1 above top-5
  EXPECT_FALSE(check_invariants(r).empty());
  r.top1_category_match = 0.7;
  r.hallucination_rate = 1.2;
  EXPECT_FALSE(check_invariants(r).empty());
  r.hallucination_rate = std::nan("");
  EXPECT_FALSE(check_invariants(r).empty());
}

TEST(Judge, GroundTruthIsFullyCorrectOverSeeds) {
  for (std::uint64_t seed : {1u, 7u, 42u}) {
    const Catalog c = generate_catalog(seed, 60, 10);
    const DatasetSplit ds = build_dataset(c, seed);
    const JudgeVerdict all_true{true, true, true, false, true, true};
    for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
      for (const auto& e : *split) {
        EXPECT_EQ(judge_response(e.response, e.target_product_id.text(), c), all_true) << e.response;
      }
    }
    const QualReport q = judge_ground_truth(ds.test, c);
    EXPECT_EQ(q.n_examples, 60);
    EXPECT_EQ(q.correct_series_name, 100.0);
    EXPECT_EQ(q.correct_price, 100.0);
    EXPECT_EQ(q.relevancy, 100.0);
    EXPECT_EQ(q.correct_material, 100.0);
    EXPECT_EQ(q.correct_color, 100.0);
    EXPECT_EQ(q.added_new_information, 0.0);
  }
}

TEST(Judge, PerturbationsFlipExactlyTheirField) {
  const Catalog c = generate_catalog(5, 40, 8);
  const DatasetSplit ds = build_dataset(c, 5);
  int applied = 0;
  for (const auto& e : ds.train) {
    const Product& p = *c.find(e.target_product_id);
    for (Perturbation kind : prodlm::testing::kPerturbations) {
      const auto edited = prodlm::testing::perturb(e.response, p, kind);
      ASSERT_TRUE(edited) << prodlm::testing::name(kind) << ": " << e.response;
      EXPECT_NE(*edited, e.response);
      EXPECT_EQ(judge_response(*edited, p.product_id.text(), c), prodlm::testing::expected_after(kind))
          << prodlm::testing::name(kind) << ": " << *edited;
      ++applied;
    }
  }
  EXPECT_EQ(applied, 5 * 120);
}

TEST(Judge, SpecExamples) {
  const Catalog& c = desk();
  const Product& p = c.products()[0];
  const std::string id = p.product_id.text();
  std::string text = "i recommend " + id + ", the " + p.series_name + " " + p.category + ". it is made of " +
                     p.materials[0] + " in " + p.colors[0] + ". it costs $" + p.price_text() + ".";
  EXPECT_EQ(judge_response(text, id, c), (JudgeVerdict{true, true, true, false, true, true}));
  // Unknown or missing ID, or empty text: all false.
  EXPECT_EQ(judge_response(text, absent_id(c).text(), c), JudgeVerdict{});
  EXPECT_EQ(judge_response(text, "", c), JudgeVerdict{});
  EXPECT_EQ(judge_response("", id, c), JudgeVerdict{});
  // No price mentioned: price false, nothing foreign.
  const std::string no_price = text.substr(0, text.find(" it costs"));
  const auto v = judge_response(no_price, id, c);
  EXPECT_FALSE(v.correct_price);
  EXPECT_FALSE(v.added_new_information);
  // Within half a cent counts as equal; a foreign dimension is new info.
  const std::string dims = text + " it measures 1 x 2 x 3 cm.";
  EXPECT_TRUE(judge_response(dims, id, c).added_new_information);
  const std::string own_dims = text + " it measures " + std::to_string(p.dimensions.width) + " x " +
                               std::to_string(p.dimensions.depth) + " x " +
                               std::to_string(p.dimensions.height) + " cm.";
  EXPECT_FALSE(judge_response(own_dims, id, c).added_new_information);
}

TEST(Qual, AggregatePercentages) {
  std::vector<JudgeVerdict> vs = {{true, false, true, false, true, false},
                                  {true, true, false, true, false, false},
                                  {false, false, true, false, true, false},
                                  {true, true, true, true, true, false}};
  const QualReport q = aggregate_verdicts(vs);
  EXPECT_EQ(q.n_examples, 4);
  EXPECT_DOUBLE_EQ(q.correct_series_name, 75.0);
  EXPECT_DOUBLE_EQ(q.correct_price, 50.0);
  EXPECT_DOUBLE_EQ(q.relevancy, 75.0);
  EXPECT_DOUBLE_EQ(q.added_new_information, 50.0);
  EXPECT_DOUBLE_EQ(q.correct_material, 75.0);
  EXPECT_DOUBLE_EQ(q.correct_color, 0.0);
  std::reverse(vs.begin(), vs.end());
  EXPECT_DOUBLE_EQ(aggregate_verdicts(vs).correct_price, 50.0);
}

TEST(Compare, SelfAndReferenceDeltas) {
  const auto refs = reference_quant_reports();
  const auto self = compare_runs(refs[0], refs[0]);
  for (const auto& row : self.rows) EXPECT_EQ(row.delta_points, 0.0) << row.metric;
  const auto cmp = compare_runs(refs[0], refs[1]);
  ASSERT_FALSE(cmp.rows.empty());
  EXPECT_EQ(cmp.rows[0].metric, "Top-1 Match");
  EXPECT_NEAR(cmp.rows[0].delta_points, 6.0, 1e-9);
  const std::string table = render_comparison(cmp);
  EXPECT_NE(table.find("Top-5 Category Match"), std::string::npos);
}

TEST(Compare, Incomparable) {
  auto a = reference_quant_reports()[0];
  auto b = a;
  b.catalog_checksum ^= 1;
  EXPECT_THROW(compare_runs(a, b), Error);
  b = a;
  b.n_examples += 1;
  try {
    compare_runs(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncomparableRuns);
  }
}

TEST(Render, QuantTableColumnsAndJsonRoundTrip) {
  Rng rng(8);
  auto r = score_predictions(random_predictions(rng, desk()), desk(), 5);
  r.label = "with ID tokens";
  r.id_mode = true;
  r.config_checksum = 0x1234;
  const std::string table = render_quant_table({r, reference_quant_reports()[1]});
  for (const char* col : {"Model", "Top-1 Match", "Top-5 Match", "Top-1 Category Match",
                          "Top-5 Category Match", "Hallucination"}) {
    EXPECT_NE(table.find(col), std::string::npos) << col;
  }
  const QuantReport back = parse_quant_report(quant_report_json(r));
  EXPECT_EQ(back.label, r.label);
  EXPECT_EQ(back.id_mode, r.id_mode);
  EXPECT_EQ(back.n_examples, r.n_examples);
  EXPECT_EQ(back.top1_match, r.top1_match);
  EXPECT_EQ(back.top5_category_match, r.top5_category_match);
  EXPECT_EQ(back.hallucination_rate, r.hallucination_rate);
  EXPECT_EQ(back.config_checksum, r.config_checksum);
  EXPECT_EQ(back.catalog_checksum, r.catalog_checksum);
  EXPECT_EQ(quant_report_json(back), quant_report_json(r));
  EXPECT_THROW(parse_quant_report("{not json"), Error);
  const std::string details = quant_details_jsonl(r);
  EXPECT_EQ(static_cast<std::size_t>(std::count(details.begin(), details.end(), '\n')),
            r.details.size() + 1);
}

TEST(Render, QualTableShowsReferences) {
  QualReport q = aggregate_verdicts({{true, true, true, false, true, true}});
  const std::string t = render_qual_table(q);
  for (const char* s : {"Correct-Series-Name", "Relevancy", "91.78", "93.9", "44.4"}) {
    EXPECT_NE(t.find(s), std::string::npos) << s;
  }
}

TEST(Evaluate, CatalogMismatchRejected) {
  const Catalog& c = desk();
  const DatasetSplit ds = build_dataset(c, 7);
  std::vector<std::string> texts;
  for (const auto& e : ds.train) texts.push_back(e.response);
  lm::ModelBundle bundle{lm::init_params<double>(lm::ModelConfig{1, 1, 8, 8, 8, 40, 1}),
                         build_base_vocab(texts), catalog_checksum(c) ^ 1, 0};
  try {
    evaluate_quantitative(bundle, ds, Split::Test, c, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CatalogMismatch);
  }
  const DatasetSplit other = build_dataset(generate_catalog(8, 32, 4), 7);
  bundle.catalog_checksum = catalog_checksum(c);
  EXPECT_THROW(evaluate_quantitative(bundle, other, Split::Test, c, 5), Error);
  EXPECT_THROW(evaluate_qualitative(bundle, other, Split::Test, c), Error);
}
