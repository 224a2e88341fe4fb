#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace forgerykit::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;     // bad flags or invalid configuration
inline constexpr int kExitData = 2;      // unreadable or invalid input data
inline constexpr int kExitInternal = 3;

// Flat view of a TOML-style config file: `[section]` headers and
// `key = value` lines, where value is a quoted string, a number, or a
// boolean. Keys are returned as "section.key" with unquoted values.
std::map<std::string, std::string> parse_config(std::string_view text);

// Runs one command line (args excludes the program name). Never throws.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace forgerykit::cli
