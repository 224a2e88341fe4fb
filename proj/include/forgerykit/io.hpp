#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace forgerykit::io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

// 17 significant digits (%.17g), round-trip exact.
// Infinities are written as `inf` / `-inf`.
std::string format_real(double value);

// Fixed-point with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

// Parses a complete decimal real (accepts `inf`). Returns false on any
// trailing garbage.
bool parse_real(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

}  // namespace forgerykit::io
