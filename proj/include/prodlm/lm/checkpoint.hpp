#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "prodlm/lm/transformer.hpp"
#include "prodlm/tokenizer.hpp"

namespace prodlm::lm {

/// Everything evaluation needs: weights, the vocabulary they were trained
/// with and the provenance checksums of the run.
struct ModelBundle {
  Model<double> model;
  Vocab vocab;
  std::uint64_t catalog_checksum = 0;
  std::uint64_t config_checksum = 0;
};

inline constexpr std::string_view kCheckpointMagic = "SLMCKPT1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Magic, version, config, checksums, embedded vocab, tensors as
/// little-endian f64 in declaration order, then FNV-1a of the payload.
std::string serialize_checkpoint(const ModelBundle& bundle);
/// Validates magic, version, shapes and the trailing checksum (FormatError).
ModelBundle parse_checkpoint(std::string_view bytes);

void write_checkpoint(const std::string& path, const ModelBundle& bundle);
ModelBundle read_checkpoint(const std::string& path);

/// The trailing payload checksum of a serialized checkpoint.
std::uint64_t checkpoint_checksum(std::string_view bytes);

}  // namespace prodlm::lm
