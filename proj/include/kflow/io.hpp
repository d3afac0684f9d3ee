#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace kflow {

/// Shortest decimal that round-trips the double ('.' separator, no locale).
std::string fmt_double(double x);

/// Write `content` to `path`, creating parent directories. Throws
/// std::runtime_error on I/O failure.
void write_text(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace kflow
