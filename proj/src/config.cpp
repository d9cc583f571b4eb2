#include "prodlm/config.hpp"

#include <unistd.h>

#include <charconv>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "prodlm/error.hpp"
#include "prodlm/hash.hpp"
#include "prodlm/io.hpp"

namespace prodlm {
namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

[[noreturn]] void invalid(const std::string& why) { throw Error(ErrorCode::InvalidConfig, why); }

class Table {
 public:
  void set(const std::string& key, std::string value, int line) {
    if (!values_.emplace(key, std::move(value)).second) {
      invalid("line " + std::to_string(line) + ": duplicate key " + key);
    }
  }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  template <typename T>
  void read(const std::string& key, T& out) {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    used_.insert(key);
    const std::string& v = it->second;
    if constexpr (std::is_same_v<T, bool>) {
      if (v == "true") out = true;
      else if (v == "false") out = false;
      else invalid(key + " must be true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      out = v;
    } else if constexpr (std::is_same_v<T, double>) {
      try {
        std::size_t pos = 0;
        out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        invalid(key + " must be a number");
      }
    } else {
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || ptr != v.data() + v.size()) invalid(key + " must be an integer");
    }
  }

  void reject_unknown() const {
    for (const auto& [key, value] : values_) {
      if (!used_.count(key)) invalid("unknown key " + key);
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

}  // namespace

void RunConfig::derive_paths() {
  if (catalog_defaulted_) catalog_path = (fs::path(out_dir) / "catalog.jsonl").string();
  if (dataset_defaulted_) dataset_dir = (fs::path(out_dir) / "dataset").string();
  if (checkpoint_defaulted_) checkpoint_path = (fs::path(out_dir) / "model.ckpt").string();
  if (report_defaulted_) report_dir = (fs::path(out_dir) / "reports").string();
}

void RunConfig::set_out_dir(const std::string& dir) {
  out_dir = dir;
  derive_paths();
}

RunConfig parse_run_config(std::string_view text, const std::string& base_dir) {
  Table table;
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') invalid("line " + std::to_string(lineno) + ": bad section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) invalid("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) invalid("line " + std::to_string(lineno) + ": key outside a section");
    table.set(section + "." + trim(std::string_view(t).substr(0, eq)),
              unquote(trim(std::string_view(t).substr(eq + 1))), lineno);
  }

  if (!table.has("run.seed")) invalid("[run] seed is required");
  if (!table.has("run.id_mode")) invalid("[run] id_mode is required (true or false)");

  RunConfig c;
  table.read("run.seed", c.seed);
  table.read("run.id_mode", c.id_mode);
  table.read("run.label", c.label);
  table.read("catalog.n_products", c.n_products);
  table.read("catalog.n_categories", c.n_categories);
  table.read("model.n_layers", c.model.n_layers);
  table.read("model.n_heads", c.model.n_heads);
  table.read("model.d_model", c.model.d_model);
  table.read("model.d_ff", c.model.d_ff);
  table.read("model.context_len", c.model.context_len);
  table.read("model.new_token_noise", c.new_token_noise);
  table.read("train.lr", c.train.lr);
  table.read("train.batch_size", c.train.batch_size);
  table.read("train.epochs", c.train.epochs);
  table.read("train.weight_decay", c.train.weight_decay);
  table.read("train.beta1", c.train.beta1);
  table.read("train.beta2", c.train.beta2);
  table.read("train.adam_eps", c.train.adam_eps);
  table.read("train.warmup_frac", c.train.warmup_frac);
  table.read("train.min_lr_ratio", c.train.min_lr_ratio);
  table.read("train.grad_clip", c.train.grad_clip);
  table.read("eval.k", c.k);
  table.read("eval.split", c.eval_split);

  std::string out_dir = "run";
  table.read("paths.out_dir", out_dir);
  c.out_dir = resolve(base_dir, out_dir);
  c.catalog_defaulted_ = !table.has("paths.catalog");
  c.dataset_defaulted_ = !table.has("paths.dataset_dir");
  c.checkpoint_defaulted_ = !table.has("paths.checkpoint");
  c.report_defaulted_ = !table.has("paths.report_dir");
  table.read("paths.catalog", c.catalog_path);
  table.read("paths.dataset_dir", c.dataset_dir);
  table.read("paths.checkpoint", c.checkpoint_path);
  table.read("paths.report_dir", c.report_dir);
  c.catalog_path = resolve(base_dir, c.catalog_path);
  c.dataset_dir = resolve(base_dir, c.dataset_dir);
  c.checkpoint_path = resolve(base_dir, c.checkpoint_path);
  c.report_dir = resolve(base_dir, c.report_dir);
  c.derive_paths();
  table.reject_unknown();

  c.model.seed = c.seed;
  c.train.seed = c.seed;
  if (c.label.empty()) c.label = c.id_mode ? "with ID tokens" : "without ID tokens";
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    invalid(e.what());
  }
  const auto parent = fs::path(path).parent_path();
  return parse_run_config(text, parent.empty() ? "." : parent.string());
}

std::string RunConfig::canonical() const {
  std::ostringstream out;
  out.precision(17);
  out << "seed=" << seed << "\nid_mode=" << id_mode << "\nn_products=" << n_products
      << "\nn_categories=" << n_categories << "\nn_layers=" << model.n_layers
      << "\nn_heads=" << model.n_heads << "\nd_model=" << model.d_model << "\nd_ff=" << model.d_ff
      << "\ncontext_len=" << model.context_len << "\nnew_token_noise=" << new_token_noise
      << "\nlr=" << train.lr << "\nbatch_size=" << train.batch_size << "\nepochs=" << train.epochs
      << "\nweight_decay=" << train.weight_decay << "\nbeta1=" << train.beta1
      << "\nbeta2=" << train.beta2 << "\nadam_eps=" << train.adam_eps
      << "\nwarmup_frac=" << train.warmup_frac << "\nmin_lr_ratio=" << train.min_lr_ratio
      << "\ngrad_clip=" << train.grad_clip << "\nk=" << k << "\nsplit=" << eval_split << "\n";
  return out.str();
}

std::uint64_t RunConfig::checksum() const { return fnv1a64(canonical()); }

void RunConfig::validate() const {
  if (n_products <= 0 || n_categories <= 0 || n_categories > n_products) {
    invalid("[catalog] needs 0 < n_categories <= n_products");
  }
  lm::ModelConfig shape = model;
  shape.vocab_size = 5;
  shape.validate();
  if (new_token_noise < 0.0) invalid("new_token_noise must be >= 0");
  try {
    train.validate();
  } catch (const Error& e) {
    invalid(e.what());
  }
  if (k < 1) invalid("[eval] k must be >= 1");
  if (eval_split != "train" && eval_split != "val" && eval_split != "test") {
    invalid("[eval] split must be train, val or test");
  }
  for (const auto& dir : {out_dir, fs::path(catalog_path).parent_path().string(), dataset_dir,
                          fs::path(checkpoint_path).parent_path().string(), report_dir}) {
    if (dir.empty()) continue;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || ::access(dir.c_str(), W_OK) != 0) invalid("directory not writable: " + dir);
  }
}

}  // namespace prodlm
