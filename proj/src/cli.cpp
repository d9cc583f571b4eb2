#include "prodlm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "prodlm/catalog.hpp"
#include "prodlm/config.hpp"
#include "prodlm/datagen.hpp"
#include "prodlm/decode.hpp"
#include "prodlm/error.hpp"
#include "prodlm/eval.hpp"
#include "prodlm/io.hpp"
#include "prodlm/lm/checkpoint.hpp"
#include "prodlm/lm/train.hpp"
#include "prodlm/tokenizer.hpp"

namespace prodlm::cli {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidHyperparameters:
      return kExitConfig;
    case ErrorCode::CatalogMismatch:
    case ErrorCode::IncomparableRuns:
    case ErrorCode::FormatError:
    case ErrorCode::IoError:
    case ErrorCode::MismatchedProduct:
      return kExitMismatch;
    case ErrorCode::InvalidArguments:
      return kExitUsage;
    default:
      return kExitInvariant;
  }
}

[[noreturn]] void mismatch(const std::string& why) { throw Error(ErrorCode::CatalogMismatch, why); }

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  RunConfig load() const {
    RunConfig c = load_run_config(config_path);
    if (seed) {
      c.seed = *seed;
      c.model.seed = *seed;
      c.train.seed = *seed;
    }
    if (!out_dir.empty()) c.set_out_dir(out_dir);
    c.validate();
    return c;
  }
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("-c,--config", common.config_path, "run configuration file")->required();
  cmd->add_option("--seed", common.seed, "override the configured seed");
  cmd->add_option("--out", common.out_dir, "override the output directory");
}

Catalog load_catalog(const RunConfig& c) {
  Catalog catalog = read_catalog(c.catalog_path);
  if (catalog.seed() != c.seed || catalog.size() != static_cast<std::size_t>(c.n_products) ||
      catalog.categories().size() != static_cast<std::size_t>(c.n_categories)) {
    mismatch("catalog " + c.catalog_path + " was generated from a different configuration");
  }
  return catalog;
}

DatasetSplit load_dataset(const RunConfig& c, const Catalog& catalog) {
  DatasetSplit ds = read_dataset(c.dataset_dir);
  if (ds.catalog_checksum != catalog_checksum(catalog)) {
    mismatch("dataset in " + c.dataset_dir + " was built from a different catalog");
  }
  if (ds.seed != c.seed) mismatch("dataset in " + c.dataset_dir + " was built with another seed");
  return ds;
}

lm::ModelBundle load_bundle(const RunConfig& c, const Catalog& catalog) {
  lm::ModelBundle bundle = lm::read_checkpoint(c.checkpoint_path);
  if (bundle.catalog_checksum != catalog_checksum(catalog)) {
    mismatch("checkpoint " + c.checkpoint_path + " was trained on a different catalog");
  }
  if (bundle.vocab.id_mode() != c.id_mode) {
    mismatch("checkpoint id_mode disagrees with the configuration");
  }
  return bundle;
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  return Split::Test;
}

int cmd_gen_catalog(const Common& common, std::ostream& out) {
  const RunConfig c = common.load();
  const Catalog catalog = generate_catalog(c.seed, c.n_products, c.n_categories);
  write_catalog(c.catalog_path, catalog);
  out << "wrote " << catalog.size() << " products in " << catalog.categories().size()
      << " categories to " << c.catalog_path << " (checksum " << hex64(catalog_checksum(catalog))
      << ")\n";
  return kExitOk;
}

int cmd_gen_data(const Common& common, std::ostream& out) {
  const RunConfig c = common.load();
  const Catalog catalog = load_catalog(c);
  const DatasetSplit ds = build_dataset(catalog, c.seed);
  write_dataset(c.dataset_dir, ds);
  out << "wrote " << ds.train.size() << "/" << ds.val.size() << "/" << ds.test.size()
      << " train/val/test examples to " << c.dataset_dir << "\n";
  return kExitOk;
}

std::string train_log_jsonl(const lm::TrainLog& log, const RunConfig& c,
                            std::uint64_t catalog_sum) {
  json header;
  header["format_version"] = 1;
  header["catalog_checksum"] = hex64(catalog_sum);
  header["config_checksum"] = hex64(c.checksum());
  std::string text = header.dump() + "\n";
  // Wall-clock time is left out so reruns stay byte-identical.
  for (const auto& r : log.records) {
    json j;
    j["step"] = r.step;
    j["split"] = r.split;
    j["loss"] = r.loss;
    j["lr"] = r.lr;
    text += j.dump() + "\n";
  }
  return text;
}

int cmd_train(const Common& common, std::ostream& out, std::ostream& err) {
  const RunConfig c = common.load();
  const Catalog catalog = load_catalog(c);
  const DatasetSplit ds = load_dataset(c, catalog);

  std::vector<std::string> corpus;
  for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
    for (const auto& e : *split) {
      corpus.push_back(e.prompt);
      corpus.push_back(e.response);
    }
  }
  const Vocab base = build_base_vocab(corpus);
  const Vocab vocab = c.id_mode ? expand_with_product_ids(base, catalog) : base;

  lm::ModelConfig mc = c.model;
  mc.vocab_size = static_cast<int>(base.size());
  lm::Model<double> model = lm::init_params<double>(mc);
  if (c.id_mode) {
    model = lm::expand_embeddings(model, static_cast<int>(catalog.size()), c.new_token_noise,
                                  c.seed);
  }
  out << "vocab " << vocab.size() << " (base " << base.size() << "), parameters "
      << model.config.parameter_count() << "\n";

  auto progress = [&](const lm::TrainRecord& r) {
    if (r.split == "train") return;
    err << "step " << r.step << " " << r.split << " loss " << std::fixed << std::setprecision(4)
        << r.loss << " (" << std::setprecision(1) << r.wall_ms / 1000.0 << " s)\n"
        << std::defaultfloat;
  };
  lm::TrainResult result = lm::train_sft(std::move(model), ds, vocab, c.train, progress);

  lm::ModelBundle bundle{std::move(result.model), vocab, catalog_checksum(catalog), c.checksum()};
  const std::string bytes = lm::serialize_checkpoint(bundle);
  write_file(c.checkpoint_path, bytes);
  const std::string log_path = (fs::path(c.report_dir) / "train_log.jsonl").string();
  write_file(log_path, train_log_jsonl(result.log, c, bundle.catalog_checksum));
  out << "wrote " << c.checkpoint_path << " (checksum " << hex64(lm::checkpoint_checksum(bytes))
      << ") and " << log_path << "\n";
  return kExitOk;
}

int report_violations(const QuantReport& report, std::ostream& err) {
  const auto violations = check_invariants(report);
  for (const auto& v : violations) err << "invariant violated: " << v << "\n";
  return violations.empty() ? kExitOk : kExitInvariant;
}

int cmd_eval(const Common& common, std::ostream& out, std::ostream& err) {
  const RunConfig c = common.load();
  const Catalog catalog = load_catalog(c);
  const DatasetSplit ds = load_dataset(c, catalog);
  const lm::ModelBundle bundle = load_bundle(c, catalog);
  const Split which = parse_split(c.eval_split);

  QuantReport quant = evaluate_quantitative(bundle, ds, which, catalog, c.k);
  quant.label = c.label;
  QualReport qual = evaluate_qualitative(bundle, ds, which, catalog, &quant);
  qual.label = c.label;

  const fs::path dir(c.report_dir);
  write_file((dir / "quant.json").string(), quant_report_json(quant));
  write_file((dir / "qual.json").string(), qual_report_json(qual));
  write_file((dir / "details.jsonl").string(), quant_details_jsonl(quant));

  std::vector<QuantReport> rows = {quant};
  for (const auto& ref : reference_quant_reports()) rows.push_back(ref);
  out << render_quant_table(rows) << "\n" << render_qual_table(qual);
  out << "reports written to " << c.report_dir << "\n";
  return report_violations(quant, err);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_compare(const std::vector<std::string>& paths, std::ostream& out, std::ostream& err) {
  std::vector<QuantReport> reports;
  for (const auto& p : paths) reports.push_back(parse_quant_report(read_file(p)));
  int status = kExitOk;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (report_violations(reports[i], err) != kExitOk) status = kExitInvariant;
  }
  if (reports.size() == 2) {
    out << render_comparison(compare_runs(reports[0], reports[1]));
  } else {
    // A seed sweep mixes catalogs; each run must match the first run on its catalog.
    for (std::size_t i = 1; i < reports.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (reports[j].catalog_checksum == reports[i].catalog_checksum) {
          compare_runs(reports[j], reports[i]);
          break;
        }
      }
    }
    out << render_quant_table(reports);
  }

  std::vector<double> with_ids, without_ids;
  for (const auto& r : reports) (r.id_mode ? with_ids : without_ids).push_back(r.top1_match);
  if (!with_ids.empty() && !without_ids.empty()) {
    const double a = median(with_ids), b = median(without_ids);
    out << std::fixed << std::setprecision(4) << "median Top-1 Match: with ID tokens " << a
        << " (" << with_ids.size() << " runs), without " << b << " (" << without_ids.size()
        << " runs)\n"
        << std::defaultfloat;
    if (a >= b - 0.02) {
      out << "directional check: consistent (ID-token arm >= baseline - 0.02)\n";
    } else {
      out << "directional check: WARNING, ID-token arm trails the baseline by more than 2 "
             "points; investigate\n";
    }
  }
  return status;
}

void print_recommendations(const lm::ModelBundle& bundle, const Catalog& catalog,
                           const std::string& query, int k, std::ostream& out) {
  try {
    const auto recs = recommend_topk(bundle.model, bundle.vocab, catalog, query, k);
    for (const auto& r : recs) {
      out << r.rank << ". " << r.product_id.text() << "  score " << std::fixed
          << std::setprecision(4) << r.sequence_logprob << std::defaultfloat;
      if (const Product* p = catalog.find(r.product_id)) {
        out << "  " << p->series_name << " " << p->category << " " << p->price_text();
      }
      if (r.hallucinated) out << "  [not in catalog]";
      out << "\n";
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoRecommendation) throw;
    out << "no product recommended\n";
  }
  const Generation g = generate(bundle.model, bundle.vocab, make_prompt(query), kMaxNewTokens);
  out << "assistant: " << g.text << "\n";
}

int cmd_query(const Common& common, const std::string& text, int k_override, std::ostream& out,
              std::ostream& err, std::istream& in) {
  const RunConfig c = common.load();
  const Catalog catalog = load_catalog(c);
  const lm::ModelBundle bundle = load_bundle(c, catalog);
  int k = k_override > 0 ? k_override : c.k;
  if (!text.empty()) {
    print_recommendations(bundle, catalog, text, k, out);
    return kExitOk;
  }
  out << "enter a query (:k N sets the list length, :quit exits)\n";
  std::string line;
  while (out << "> " << std::flush, std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    line = line.substr(b);
    if (line == ":quit" || line == ":q") break;
    if (line.rfind(":k", 0) == 0) {
      std::istringstream args(line.substr(2));
      int n = 0;
      if (args >> n && n >= 1) {
        k = n;
        out << "k = " << k << "\n";
      } else {
        err << "usage: :k N with N >= 1\n";
      }
      continue;
    }
    try {
      print_recommendations(bundle, catalog, line, k, out);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
    }
  }
  return kExitOk;
}

int cmd_report(const std::string& path, std::ostream& out, std::ostream& err) {
  const QuantReport report = parse_quant_report(read_file(path));
  out << render_quant_table({report});
  return report_violations(report, err);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        std::istream& in) {
  CLI::App app{"Product recommendation language model pipeline", "prodlm"};
  app.require_subcommand(1);

  Common common;
  auto* gen_catalog = app.add_subcommand("gen-catalog", "generate the synthetic catalog");
  auto* gen_data = app.add_subcommand("gen-data", "generate queries, responses and splits");
  auto* train = app.add_subcommand("train", "fine-tune the language model");
  auto* eval = app.add_subcommand("eval", "quantitative and qualitative evaluation");
  auto* query = app.add_subcommand("query", "recommend products for a query (REPL without one)");
  query->alias("recommend");
  for (auto* cmd : {gen_catalog, gen_data, train, eval, query}) add_common(cmd, common);

  std::string query_text;
  int query_k = 0;
  query->add_option("text", query_text, "customer query");
  query->add_option("-k", query_k, "number of recommendations")->check(CLI::PositiveNumber);

  std::vector<std::string> compare_paths;
  auto* compare = app.add_subcommand("compare", "compare quant.json reports of two arms");
  compare->add_option("reports", compare_paths, "quant.json files")
      ->required()
      ->expected(2, -1)
      ->check(CLI::ExistingFile);

  std::string report_path;
  auto* report = app.add_subcommand("report", "validate and render a quant.json report");
  report->add_option("quant_json", report_path)->required()->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_catalog) return cmd_gen_catalog(common, out);
    if (*gen_data) return cmd_gen_data(common, out);
    if (*train) return cmd_train(common, out, err);
    if (*eval) return cmd_eval(common, out, err);
    if (*compare) return cmd_compare(compare_paths, out, err);
    if (*query) return cmd_query(common, query_text, query_k, out, err, in);
    if (*report) return cmd_report(report_path, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr, std::cin);
}

}  // namespace prodlm::cli
