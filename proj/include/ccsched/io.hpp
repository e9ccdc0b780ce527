#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

namespace ccsched {

/// Parses a JSON file; syntax errors become ParseError carrying the path and
/// the parser's line/column.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace ccsched
