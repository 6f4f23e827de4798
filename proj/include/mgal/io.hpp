#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mgal::io {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Non-empty lines of a newline-delimited file, paired with 1-based line numbers.
struct Line {
  std::size_t number;
  std::string text;
};
std::vector<Line> read_lines(const std::filesystem::path& path);

// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace mgal::io
