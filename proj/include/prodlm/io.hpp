#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace prodlm {

/// Whole-file binary read; throws IoError.
std::string read_file(const std::string& path);
/// Whole-file binary write, creating parent directories; throws IoError.
void write_file(const std::string& path, std::string_view contents);

std::string hex64(std::uint64_t value);
std::uint64_t parse_hex64(std::string_view text);

}  // namespace prodlm
