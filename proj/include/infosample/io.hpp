#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace infosample {

/// Reads a whole file; throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes through a `.partial` sibling and renames into place, so readers
/// never observe a half-written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Parses JSON, turning parse errors into FormatError with a line number.
nlohmann::json parse_json(const std::string& text, const std::string& source);

/// Checked field access for hand-rolled schemas; errors name the field.
const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                    const std::string& source);

}  // namespace infosample
