#include <cctype>

#include "forgerykit/cli.hpp"
#include "forgerykit/error.hpp"

namespace forgerykit::cli {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool bare_key(std::string_view k) {
    if (k.empty()) return false;
    for (char c : k) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    }
    return true;
}

}  // namespace

std::map<std::string, std::string> parse_config(std::string_view text) {
    std::map<std::string, std::string> out;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        const std::string where = "config line " + std::to_string(line_no);

        // Strip comments outside of quoted strings.
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']' || !bare_key(trim(line.substr(1, line.size() - 2)))) {
                throw Error(ErrorKind::ParseError, where + ": malformed section header");
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorKind::ParseError, where + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (!bare_key(key) || value.empty()) {
            throw Error(ErrorKind::ParseError, where + ": expected key = value");
        }
        if (value.front() == '"') {
            if (value.size() < 2 || value.back() != '"') {
                throw Error(ErrorKind::ParseError, where + ": unterminated string");
            }
            value = value.substr(1, value.size() - 2);
        }
        const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
        if (!out.emplace(full, std::string(value)).second) {
            throw Error(ErrorKind::ParseError, where + ": duplicate key " + full);
        }
        if (end == text.size()) break;
    }
    return out;
}

}  // namespace forgerykit::cli
