#pragma once

#include <cstdint>
#include <string>

namespace xtalk {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

/// FNV-1a 64-bit hash of a file's bytes, as 16 hex digits.
std::string file_hash_hex(const std::string& path);

/// Writes content to a temporary file in the target directory and renames it
/// into place, so a failed command never leaves a partial output.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace xtalk
