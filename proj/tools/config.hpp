#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tdsr::app {

enum class ValueType { real, integer, text, list, flag };

/// Typed key-value settings addressed as "section.key".
///
/// Config grammar (one item per line):
///   # comment            ignored, also after a value
///   [section]            starts a section
///   key = value          value runs to end of line, surrounding blanks trimmed
/// Reals accept a trailing "/pi" or "*pi"; lists are comma separated; flags
/// are true/false/yes/no/on/off/1/0.
class Settings {
public:
    void declare(const std::string& key, ValueType type, const std::string& value);
    bool has(std::string_view key) const;
    /// Type-checked assignment; unknown keys and malformed values are config errors.
    void set(std::string_view key, const std::string& value);

    double real(std::string_view key) const;
    std::int64_t integer(std::string_view key) const;
    const std::string& text(std::string_view key) const;
    std::vector<std::string> list(std::string_view key) const;
    std::vector<double> reals(std::string_view key) const;
    bool flag(std::string_view key) const;
    bool empty(std::string_view key) const;

    /// Resolved settings in the config grammar; reading it back reproduces them.
    std::string render() const;

private:
    struct Entry {
        ValueType type;
        std::string value;
    };
    const Entry& entry(std::string_view key) const;

    std::map<std::string, Entry, std::less<>> entries_;
};

struct Assignment {
    std::string key;
    std::string value;
    int line = 0;
};

std::vector<Assignment> parse_config_text(std::string_view text, std::string_view origin);
std::vector<Assignment> read_config_file(const std::filesystem::path& path);
/// "section.key=value" from the command line.
Assignment parse_override(std::string_view text);

double parse_real(std::string_view text);

}  // namespace tdsr::app
