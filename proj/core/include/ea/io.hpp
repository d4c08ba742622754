#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace ea {

std::string read_text_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames, creating parent dirs.
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Parses a JSON file; syntax errors become ErrorKind::validation with the
/// file path and 1-based line number in the message.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Two-space indented JSON followed by a newline.
std::string dump_json(const nlohmann::json& value);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace ea
