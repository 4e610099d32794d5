// Small file helpers shared by the loaders, writers and the CLI.
#pragma once

#include <filesystem>
#include <string>

namespace vantage {

/// Whole file as a string. Throws IoError.
std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so
/// readers never observe a partial file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace vantage
