#include "prodlm/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <set>

#include <json.hpp>

#include "prodlm/io.hpp"
#include "prodlm/lexicon.hpp"

namespace prodlm {

using json = nlohmann::ordered_json;

QuantReport score_predictions(const std::vector<Prediction>& predictions, const Catalog& catalog,
                              int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArguments, "k must be >= 1");
  QuantReport r;
  r.k = k;
  r.n_examples = static_cast<int>(predictions.size());
  r.catalog_checksum = catalog_checksum(catalog);
  std::int64_t top1 = 0, top5 = 0, top1_cat = 0, top5_cat = 0;
  for (const auto& pred : predictions) {
    ExampleDetail d;
    d.query = pred.query;
    d.gold = pred.gold;
    const Product* gold = catalog.find(pred.gold);
    if (!gold) throw Error(ErrorCode::CatalogMismatch, "gold " + pred.gold.text() + " not in catalog");
    const auto limit = std::min(pred.returned.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < limit; ++i) {
      const ProductId id = pred.returned[i];
      const Product* p = catalog.find(id);
      d.returned.push_back(id);
      d.hallucinated.push_back(p == nullptr);
      const bool exact = p != nullptr && id == pred.gold;
      const bool same_category = p != nullptr && p->category == gold->category;
      if (i == 0) {
        d.top1 = exact;
        d.top1_category = same_category;
      }
      d.top5 = d.top5 || exact;
      d.top5_category = d.top5_category || same_category;
      ++r.n_recommendations;
      if (p == nullptr) ++r.n_hallucinated;
    }
    top1 += d.top1;
    top5 += d.top5;
    top1_cat += d.top1_category;
    top5_cat += d.top5_category;
    r.details.push_back(std::move(d));
  }
  const double n = std::max(1, r.n_examples);
  r.top1_match = static_cast<double>(top1) / n;
  r.top5_match = static_cast<double>(top5) / n;
  r.top1_category_match = static_cast<double>(top1_cat) / n;
  r.top5_category_match = static_cast<double>(top5_cat) / n;
  r.hallucination_rate = r.n_recommendations == 0
                             ? 0.0
                             : static_cast<double>(r.n_hallucinated) /
                                   static_cast<double>(r.n_recommendations);
  return r;
}

std::vector<std::string> check_invariants(const QuantReport& r) {
  std::vector<std::string> out;
  auto in_range = [&out](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) out.push_back(std::string(name) + " outside [0, 1]");
  };
  in_range("top1_match", r.top1_match);
  in_range("top5_match", r.top5_match);
  in_range("top1_category_match", r.top1_category_match);
  in_range("top5_category_match", r.top5_category_match);
  in_range("hallucination_rate", r.hallucination_rate);
  if (r.top1_match > r.top5_match) out.emplace_back("top1_match > top5_match");
  if (r.top1_match > r.top1_category_match) out.emplace_back("top1_match > top1_category_match");
  if (r.top5_match > r.top5_category_match) out.emplace_back("top5_match > top5_category_match");
  if (r.top1_category_match > r.top5_category_match) {
    out.emplace_back("top1_category_match > top5_category_match");
  }
  if (r.n_examples < 0) out.emplace_back("negative n_examples");
  if (r.n_hallucinated < 0 || r.n_hallucinated > r.n_recommendations) {
    out.emplace_back("hallucination count outside [0, n_recommendations]");
  }
  if (r.k < 1) out.emplace_back("k < 1");
  return out;
}

namespace {

void check_provenance(const lm::ModelBundle& bundle, const DatasetSplit& dataset,
                      const Catalog& catalog) {
  const std::uint64_t checksum = catalog_checksum(catalog);
  if (bundle.catalog_checksum != checksum) {
    throw Error(ErrorCode::CatalogMismatch, "checkpoint was trained on catalog " +
                                                hex64(bundle.catalog_checksum) + ", not " +
                                                hex64(checksum));
  }
  if (dataset.catalog_checksum != checksum) {
    throw Error(ErrorCode::CatalogMismatch, "dataset was built from catalog " +
                                                hex64(dataset.catalog_checksum) + ", not " +
                                                hex64(checksum));
  }
}

}  // namespace

QuantReport evaluate_quantitative(const lm::ModelBundle& bundle, const DatasetSplit& dataset,
                                  Split which, const Catalog& catalog, int k) {
  check_provenance(bundle, dataset, catalog);
  const auto& examples = dataset.split(which);
  if (examples.empty()) throw Error(ErrorCode::InvalidArguments, "no examples to evaluate");
  std::vector<Prediction> predictions;
  predictions.reserve(examples.size());
  for (const auto& ex : examples) {
    Prediction pred{ex.query, ex.target_product_id, {}};
    try {
      for (const auto& rec : recommend_topk(bundle.model, bundle.vocab, catalog, ex.query, k)) {
        pred.returned.push_back(rec.product_id);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoRecommendation) throw;
    }
    predictions.push_back(std::move(pred));
  }
  QuantReport report = score_predictions(predictions, catalog, k);
  report.id_mode = bundle.vocab.id_mode();
  report.config_checksum = bundle.config_checksum;
  report.label = report.id_mode ? "with ID tokens" : "without ID tokens";
  return report;
}

namespace {

struct Mentions {
  std::vector<std::string> series, categories, materials, colors;
  std::vector<std::int64_t> prices_cents;
  std::vector<Dimensions> dimensions;
};

Mentions extract_mentions(std::string_view text) {
  Mentions m;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    switch (lexicon::classify(word)) {
      case lexicon::Kind::Series: m.series.push_back(word); break;
      case lexicon::Kind::Category: m.categories.push_back(word); break;
      case lexicon::Kind::Material: m.materials.push_back(word); break;
      case lexicon::Kind::Color: m.colors.push_back(word); break;
      case lexicon::Kind::None: break;
    }
    word.clear();
  };
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();

  static const std::regex price_re(R"(\$\s*(\d+)(?:\s*\.\s*(\d{1,2}))?)");
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), price_re); it != std::sregex_iterator(); ++it) {
    std::int64_t cents = std::stoll((*it)[1].str()) * 100;
    if ((*it)[2].matched) {
      std::string frac = (*it)[2].str();
      if (frac.size() == 1) frac += '0';
      cents += std::stoll(frac);
    }
    m.prices_cents.push_back(cents);
  }
  static const std::regex dims_re(R"((\d+)\s*x\s*(\d+)\s*x\s*(\d+)\s*cm)");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), dims_re); it != std::sregex_iterator(); ++it) {
    m.dimensions.push_back({std::stoi((*it)[1].str()), std::stoi((*it)[2].str()), std::stoi((*it)[3].str())});
  }
  return m;
}

bool contains(const std::vector<std::string>& list, const std::string& value) {
  return std::find(list.begin(), list.end(), value) != list.end();
}

// True iff something is mentioned and every mention is allowed.
bool all_within(const std::vector<std::string>& mentioned, const std::vector<std::string>& allowed) {
  return !mentioned.empty() &&
         std::all_of(mentioned.begin(), mentioned.end(),
                     [&](const std::string& v) { return contains(allowed, v); });
}

bool any_outside(const std::vector<std::string>& mentioned, const std::vector<std::string>& allowed) {
  return std::any_of(mentioned.begin(), mentioned.end(),
                     [&](const std::string& v) { return !contains(allowed, v); });
}

bool price_equal(std::int64_t a_cents, std::int64_t b_cents) {
  // ±0.005 currency units is half a cent.
  return 2 * std::llabs(a_cents - b_cents) <= 1;
}

}  // namespace

JudgeVerdict judge_response(std::string_view text, std::string_view claimed_id, const Catalog& catalog) {
  JudgeVerdict v;
  const Product* p = catalog.lookup(claimed_id);
  if (!p || text.empty()) return v;
  const Mentions m = extract_mentions(text);
  v.correct_series_name = all_within(m.series, {p->series_name});
  v.correct_price = !m.prices_cents.empty() && price_equal(m.prices_cents.front(), p->price_cents);
  v.relevancy = all_within(m.categories, {p->category});
  v.correct_material = all_within(m.materials, p->materials);
  v.correct_color = all_within(m.colors, p->colors);
  const bool foreign_price = std::any_of(m.prices_cents.begin(), m.prices_cents.end(), [&](auto c) {
    return !price_equal(c, p->price_cents);
  });
  const bool foreign_dims = std::any_of(m.dimensions.begin(), m.dimensions.end(),
                                        [&](const Dimensions& d) { return !(d == p->dimensions); });
  v.added_new_information = foreign_price || foreign_dims || any_outside(m.series, {p->series_name}) ||
                            any_outside(m.materials, p->materials) || any_outside(m.colors, p->colors);
  return v;
}

QualReport aggregate_verdicts(const std::vector<JudgeVerdict>& verdicts) {
  QualReport r;
  r.n_examples = static_cast<int>(verdicts.size());
  if (verdicts.empty()) return r;
  auto pct = [&](bool JudgeVerdict::*field) {
    const auto n = std::count_if(verdicts.begin(), verdicts.end(),
                                 [field](const JudgeVerdict& v) { return v.*field; });
    return 100.0 * static_cast<double>(n) / static_cast<double>(verdicts.size());
  };
  r.correct_series_name = pct(&JudgeVerdict::correct_series_name);
  r.correct_price = pct(&JudgeVerdict::correct_price);
  r.relevancy = pct(&JudgeVerdict::relevancy);
  r.added_new_information = pct(&JudgeVerdict::added_new_information);
  r.correct_material = pct(&JudgeVerdict::correct_material);
  r.correct_color = pct(&JudgeVerdict::correct_color);
  return r;
}

QualReport judge_ground_truth(const std::vector<TrainingExample>& examples, const Catalog& catalog) {
  std::vector<JudgeVerdict> verdicts;
  verdicts.reserve(examples.size());
  for (const auto& ex : examples) {
    verdicts.push_back(judge_response(ex.response, ex.target_product_id.text(), catalog));
  }
  QualReport r = aggregate_verdicts(verdicts);
  r.label = "ground truth";
  r.catalog_checksum = catalog_checksum(catalog);
  return r;
}

QualReport evaluate_qualitative(const lm::ModelBundle& bundle, const DatasetSplit& dataset,
                                Split which, const Catalog& catalog, const QuantReport* quant) {
  check_provenance(bundle, dataset, catalog);
  const auto& examples = dataset.split(which);
  if (quant && quant->details.size() != examples.size()) {
    throw Error(ErrorCode::InvalidArguments, "quantitative report covers different examples");
  }
  std::vector<JudgeVerdict> verdicts;
  verdicts.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    std::optional<ProductId> rank1;
    if (quant) {
      if (!quant->details[i].returned.empty()) rank1 = quant->details[i].returned.front();
    } else {
      try {
        rank1 = recommend_topk(bundle.model, bundle.vocab, catalog, ex.query, 5).front().product_id;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoRecommendation) throw;
      }
    }
    const Generation g = generate(bundle.model, bundle.vocab, make_prompt(ex.query), kMaxNewTokens);
    verdicts.push_back(rank1 ? judge_response(g.text, rank1->text(), catalog) : JudgeVerdict{});
  }
  QualReport r = aggregate_verdicts(verdicts);
  r.label = bundle.vocab.id_mode() ? "with ID tokens" : "without ID tokens";
  r.catalog_checksum = bundle.catalog_checksum;
  r.config_checksum = bundle.config_checksum;
  return r;
}

Comparison compare_runs(const QuantReport& a, const QuantReport& b) {
  if (a.n_examples != b.n_examples) {
    throw Error(ErrorCode::IncomparableRuns, "test set sizes differ (" + std::to_string(a.n_examples) +
                                                 " vs " + std::to_string(b.n_examples) + ")");
  }
  if (a.catalog_checksum != b.catalog_checksum) {
    throw Error(ErrorCode::IncomparableRuns, "catalog checksums differ");
  }
  Comparison c{a.label, b.label, {}};
  auto row = [&c](std::string name, double x, double y) {
    c.rows.push_back({std::move(name), x, y, (x - y) * 100.0});
  };
  row("Top-1 Match", a.top1_match, b.top1_match);
  row("Top-5 Match", a.top5_match, b.top5_match);
  row("Top-1 Category Match", a.top1_category_match, b.top1_category_match);
  row("Top-5 Category Match", a.top5_category_match, b.top5_category_match);
  row("Hallucination Rate", a.hallucination_rate, b.hallucination_rate);
  return c;
}

std::string quant_report_json(const QuantReport& r) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "quantitative";
  j["label"] = r.label;
  j["id_mode"] = r.id_mode;
  j["k"] = r.k;
  j["n_examples"] = r.n_examples;
  j["top1_match"] = r.top1_match;
  j["top5_match"] = r.top5_match;
  j["top1_category_match"] = r.top1_category_match;
  j["top5_category_match"] = r.top5_category_match;
  j["hallucination_rate"] = r.hallucination_rate;
  j["n_recommendations"] = r.n_recommendations;
  j["n_hallucinated"] = r.n_hallucinated;
  j["catalog_checksum"] = hex64(r.catalog_checksum);
  j["config_checksum"] = hex64(r.config_checksum);
  return j.dump(2) + "\n";
}

QuantReport parse_quant_report(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format_version").get<int>() != 1 || j.at("kind").get<std::string>() != "quantitative") {
      throw Error(ErrorCode::FormatError, "not a version-1 quantitative report");
    }
    QuantReport r;
    r.label = j.at("label").get<std::string>();
    r.id_mode = j.at("id_mode").get<bool>();
    r.k = j.at("k").get<int>();
    r.n_examples = j.at("n_examples").get<int>();
    r.top1_match = j.at("top1_match").get<double>();
    r.top5_match = j.at("top5_match").get<double>();
    r.top1_category_match = j.at("top1_category_match").get<double>();
    r.top5_category_match = j.at("top5_category_match").get<double>();
    r.hallucination_rate = j.at("hallucination_rate").get<double>();
    r.n_recommendations = j.at("n_recommendations").get<std::int64_t>();
    r.n_hallucinated = j.at("n_hallucinated").get<std::int64_t>();
    r.catalog_checksum = parse_hex64(j.at("catalog_checksum").get<std::string>());
    r.config_checksum = parse_hex64(j.at("config_checksum").get<std::string>());
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("report json: ") + e.what());
  }
}

std::string quant_details_jsonl(const QuantReport& r) {
  json header;
  header["format_version"] = 1;
  header["label"] = r.label;
  header["catalog_checksum"] = hex64(r.catalog_checksum);
  header["config_checksum"] = hex64(r.config_checksum);
  std::string out = header.dump() + "\n";
  for (const auto& d : r.details) {
    json j;
    j["query"] = d.query;
    j["gold"] = d.gold.text();
    json returned = json::array();
    for (const auto& id : d.returned) returned.push_back(id.text());
    j["returned"] = returned;
    j["hallucinated"] = d.hallucinated;
    j["top1"] = d.top1;
    j["top5"] = d.top5;
    j["top1_category"] = d.top1_category;
    j["top5_category"] = d.top5_category;
    out += j.dump() + "\n";
  }
  return out;
}

std::string qual_report_json(const QualReport& r) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "qualitative";
  j["label"] = r.label;
  j["n_examples"] = r.n_examples;
  j["correct_series_name"] = r.correct_series_name;
  j["correct_price"] = r.correct_price;
  j["relevancy"] = r.relevancy;
  j["added_new_information"] = r.added_new_information;
  j["correct_material"] = r.correct_material;
  j["correct_color"] = r.correct_color;
  j["catalog_checksum"] = hex64(r.catalog_checksum);
  j["config_checksum"] = hex64(r.config_checksum);
  return j.dump(2) + "\n";
}

namespace {

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * fraction);
  return buf;
}

}  // namespace

std::string render_quant_table(const std::vector<QuantReport>& reports) {
  const std::vector<std::string> headers = {"Model", "Top-1 Match", "Top-5 Match",
                                            "Top-1 Category Match", "Top-5 Category Match",
                                            "Hallucination"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) {
    rows.push_back({r.label, percent(r.top1_match), percent(r.top5_match),
                    percent(r.top1_category_match), percent(r.top5_category_match),
                    percent(r.hallucination_rate)});
  }
  std::vector<std::size_t> widths(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    widths[c] = headers[c].size();
    for (const auto& row : rows) widths[c] = std::max(widths[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < cells.size(); ++c) out += pad(cells[c], widths[c] + 2);
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(headers);
  std::size_t total = 0;
  for (auto w : widths) total += w + 2;
  out += std::string(total - 2, '-') + "\n";
  for (const auto& row : rows) out += line(row);
  return out;
}

std::string render_qual_table(const QualReport& r) {
  const QualReport ref = reference_qual_report();
  const std::size_t width = std::max<std::size_t>(r.label.size(), 8) + 2;
  std::string out = pad("Judge parameter", 25) + pad(r.label, width) + ref.label + "\n";
  auto row = [&](const std::string& name, double v, double ref_value) {
    char value[32], ref_text[32];
    std::snprintf(value, sizeof value, "%.2f%%", v);
    std::snprintf(ref_text, sizeof ref_text, "%.2f%%", ref_value);
    out += pad(name, 25) + pad(value, width) + ref_text + "\n";
  };
  row("Correct-Series-Name", r.correct_series_name, ref.correct_series_name);
  row("Correct-Price", r.correct_price, ref.correct_price);
  row("Relevancy", r.relevancy, ref.relevancy);
  row("Added-New-Information", r.added_new_information, ref.added_new_information);
  row("Correct-Material", r.correct_material, ref.correct_material);
  row("Correct-Color", r.correct_color, ref.correct_color);
  out += "n = " + std::to_string(r.n_examples) + "\n";
  return out;
}

std::string render_comparison(const Comparison& c) {
  const std::size_t width = std::max<std::size_t>({c.label_a.size(), c.label_b.size(), 20}) + 2;
  std::string out = pad("Metric", 24) + pad(c.label_a, width) + pad(c.label_b, width) + "Delta (points)\n";
  for (const auto& row : c.rows) {
    char delta[32];
    std::snprintf(delta, sizeof delta, "%+.1f", row.delta_points);
    out += pad(row.metric, 24) + pad(percent(row.a), width) + pad(percent(row.b), width) + delta + "\n";
  }
  return out;
}

std::vector<QuantReport> reference_quant_reports() {
  QuantReport with_tokens;
  with_tokens.label = "7B reference, with ID tokens";
  with_tokens.id_mode = true;
  with_tokens.n_examples = 2033;
  with_tokens.top1_match = 0.287;
  with_tokens.top5_match = 0.463;
  with_tokens.top1_category_match = 0.913;
  with_tokens.top5_category_match = 0.971;

  QuantReport without = with_tokens;
  without.label = "7B reference, without ID tokens";
  without.id_mode = false;
  without.top1_match = 0.227;
  without.top5_match = 0.444;
  without.top1_category_match = 0.875;
  without.top5_category_match = 0.966;
  without.hallucination_rate = 0.033;
  return {with_tokens, without};
}

QualReport reference_qual_report() {
  QualReport r;
  r.label = "7B reference, with ID tokens";
  r.correct_series_name = 44.4;
  r.correct_price = 43.6;
  r.relevancy = 91.78;
  r.added_new_information = 93.9;
  r.correct_material = 77.3;
  r.correct_color = 74.0;
  return r;
}

}  // namespace prodlm
