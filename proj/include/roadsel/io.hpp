#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace roadsel::io {

// Writes to a sibling temporary file and renames it over `path`, so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

// Lowercase hex SHA-256 of the file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace roadsel::io
