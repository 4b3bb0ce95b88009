#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "coneiso/cone.hpp"

namespace coneiso {

using json = nlohmann::json;

/// Shortest round-trip-safe rendering with 17 significant digits.
std::string format_double(double x);

/// Joins fields into one RFC-4180 CSV line, quoting where required.
std::string csv_line(const std::vector<std::string>& fields);

json cone_to_json(const ConeSpec& cone);
/// Throws ValidationError with the offending key path on malformed input.
ConeSpec cone_from_json(const json& j);

/// Reads a JSON file or, if `text` starts with '{', parses it inline.
json parse_json_argument(const std::string& text);
json read_json_file(const std::filesystem::path& path);

/// Writes `content` to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

}  // namespace coneiso
