#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace provenance {

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// Lowercase hex SHA-256 of a file's contents, read in chunks.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace provenance
