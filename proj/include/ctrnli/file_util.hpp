#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace ctrnli {

std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Parses a JSON file; throws std::runtime_error naming the file on failure.
// When `duplicate_top_level_key` is non-null it receives the first key that
// occurs twice in the top-level object (empty if none).
nlohmann::json read_json_file(const std::filesystem::path& path, std::string* duplicate_top_level_key = nullptr);

std::string trim(std::string_view text);

std::string to_lower_ascii(std::string_view text);

}  // namespace ctrnli
