#include "prodlm/lm/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "prodlm/io.hpp"

namespace prodlm::lm {
namespace {

class Writer {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(std::string_view s) { out_ += s; }
  std::string& str() { return out_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_ += static_cast<char>((v >> (8 * i)) & 0xff);
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error(ErrorCode::FormatError, "truncated checkpoint");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]))
           << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const ModelBundle& bundle) {
  const auto& cfg = bundle.model.config;
  Writer w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  for (std::int64_t v : {cfg.n_layers, cfg.n_heads, cfg.d_model, cfg.d_ff, cfg.context_len,
                         cfg.vocab_size}) {
    w.u64(static_cast<std::uint64_t>(v));
  }
  w.u64(cfg.seed);
  w.u64(bundle.catalog_checksum);
  w.u64(bundle.config_checksum);
  const std::string vocab = serialize_vocab(bundle.vocab);
  w.u64(vocab.size());
  w.bytes(vocab);
  for_each_tensor(
      [&w](const std::string&, const auto& t) {
        for (Eigen::Index i = 0; i < t.size(); ++i) w.f64(t.data()[i]);
      },
      bundle.model.params);
  const std::string_view payload = std::string_view(w.str()).substr(kCheckpointMagic.size());
  w.u64(fnv1a64(payload));
  return std::move(w.str());
}

std::uint64_t checkpoint_checksum(std::string_view bytes) {
  if (bytes.size() < kCheckpointMagic.size() + 8) {
    throw Error(ErrorCode::FormatError, "checkpoint too short");
  }
  Reader r(bytes.substr(bytes.size() - 8));
  return r.u64();
}

ModelBundle parse_checkpoint(std::string_view bytes) {
  if (!bytes.starts_with(kCheckpointMagic)) throw Error(ErrorCode::FormatError, "bad checkpoint magic");
  const std::uint64_t stored = checkpoint_checksum(bytes);
  const std::string_view payload =
      bytes.substr(kCheckpointMagic.size(), bytes.size() - kCheckpointMagic.size() - 8);
  if (fnv1a64(payload) != stored) throw Error(ErrorCode::FormatError, "checkpoint checksum mismatch");

  Reader r(payload);
  if (r.u32() != kCheckpointVersion) throw Error(ErrorCode::FormatError, "unsupported checkpoint version");
  ModelConfig cfg;
  cfg.n_layers = static_cast<int>(r.u64());
  cfg.n_heads = static_cast<int>(r.u64());
  cfg.d_model = static_cast<int>(r.u64());
  cfg.d_ff = static_cast<int>(r.u64());
  cfg.context_len = static_cast<int>(r.u64());
  cfg.vocab_size = static_cast<int>(r.u64());
  cfg.seed = r.u64();
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::FormatError, std::string("checkpoint config: ") + e.what());
  }
  const std::uint64_t catalog_checksum = r.u64();
  const std::uint64_t config_checksum = r.u64();
  const std::uint64_t vocab_len = r.u64();
  Vocab vocab = parse_vocab(r.bytes(vocab_len));
  if (vocab.size() != static_cast<std::size_t>(cfg.vocab_size)) {
    throw Error(ErrorCode::FormatError, "embedded vocabulary size disagrees with config");
  }
  // Shapes come from the config; the values overwrite the fresh init.
  ModelConfig shape = cfg;
  Model<double> model{cfg, {}};
  {
    Model<double> blank = init_params<double>(shape);
    model.params = std::move(blank.params);
  }
  if (r.remaining() != count_scalars(model.params) * 8) {
    throw Error(ErrorCode::FormatError, "checkpoint tensor payload has the wrong size");
  }
  for_each_tensor(
      [&r](const std::string&, auto& t) {
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = r.f64();
      },
      model.params);
  return {std::move(model), std::move(vocab), catalog_checksum, config_checksum};
}

void write_checkpoint(const std::string& path, const ModelBundle& bundle) {
  write_file(path, serialize_checkpoint(bundle));
}

ModelBundle read_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path)); }

}  // namespace prodlm::lm
