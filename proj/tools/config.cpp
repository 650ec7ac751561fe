#include "config.hpp"

#include <charconv>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tdsr/error.hpp"

namespace tdsr::app {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(const std::string& message) { throw Error(ErrorKind::config, message); }

std::int64_t parse_integer(std::string_view text) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        fail("expected an integer, got '" + std::string(text) + "'");
    return v;
}

bool parse_flag(std::string_view text) {
    if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
    if (text == "false" || text == "no" || text == "off" || text == "0") return false;
    fail("expected true or false, got '" + std::string(text) + "'");
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    if (trim(text).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        const auto item = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
        if (item.empty()) fail("empty item in list '" + std::string(text) + "'");
        out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

void check_value(ValueType type, const std::string& value) {
    switch (type) {
        case ValueType::real:
            if (!value.empty()) parse_real(value);
            break;
        case ValueType::integer:
            parse_integer(value);
            break;
        case ValueType::flag:
            parse_flag(value);
            break;
        case ValueType::list:
            split_list(value);
            break;
        case ValueType::text:
            break;
    }
}

}  // namespace

double parse_real(std::string_view text) {
    text = trim(text);
    double scale = 1.0;
    if (text.ends_with("/pi")) {
        scale = 1.0 / std::numbers::pi;
        text.remove_suffix(3);
    } else if (text.ends_with("*pi")) {
        scale = std::numbers::pi;
        text.remove_suffix(3);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        fail("expected a number, got '" + std::string(text) + "'");
    return v * scale;
}

void Settings::declare(const std::string& key, ValueType type, const std::string& value) {
    check_value(type, value);
    entries_[key] = Entry{type, value};
}

bool Settings::has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

void Settings::set(std::string_view key, const std::string& value) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) fail("unknown key '" + std::string(key) + "'");
    try {
        check_value(it->second.type, value);
    } catch (const Error& e) {
        fail(std::string(key) + ": " + e.what());
    }
    it->second.value = value;
}

const Settings::Entry& Settings::entry(std::string_view key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) fail("unknown key '" + std::string(key) + "'");
    return it->second;
}

double Settings::real(std::string_view key) const {
    const auto& e = entry(key);
    if (e.value.empty()) fail(std::string(key) + " has no value");
    return parse_real(e.value);
}

std::int64_t Settings::integer(std::string_view key) const { return parse_integer(entry(key).value); }
const std::string& Settings::text(std::string_view key) const { return entry(key).value; }
std::vector<std::string> Settings::list(std::string_view key) const { return split_list(entry(key).value); }
bool Settings::flag(std::string_view key) const { return parse_flag(entry(key).value); }
bool Settings::empty(std::string_view key) const { return trim(entry(key).value).empty(); }

std::vector<double> Settings::reals(std::string_view key) const {
    std::vector<double> out;
    for (const auto& s : list(key)) out.push_back(parse_real(s));
    return out;
}

std::string Settings::render() const {
    std::ostringstream os;
    std::string section;
    for (const auto& [key, e] : entries_) {
        const auto dot = key.find('.');
        const std::string s = key.substr(0, dot);
        if (s != section) {
            if (!section.empty()) os << '\n';
            os << '[' << s << "]\n";
            section = s;
        }
        os << key.substr(dot + 1) << " = " << e.value << '\n';
    }
    return os.str();
}

std::vector<Assignment> parse_config_text(std::string_view text, std::string_view origin) {
    std::vector<Assignment> out;
    std::string section;
    int number = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == text.npos ? text.npos : nl - start);
        start = nl == text.npos ? text.size() + 1 : nl + 1;
        ++number;
        if (const auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = std::string(origin) + ":" + std::to_string(number) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') fail(where + "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty() || section.find_first_of(" .=") != section.npos)
                fail(where + "bad section name '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == line.npos) fail(where + "expected key = value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty() || key.find_first_of(" .") != key.npos) fail(where + "bad key '" + std::string(key) + "'");
        if (section.empty()) fail(where + "key outside any section");
        out.push_back({section + "." + std::string(key), std::string(trim(line.substr(eq + 1))), number});
    }
    return out;
}

std::vector<Assignment> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot read config " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config_text(os.str(), path.string());
}

Assignment parse_override(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == text.npos) fail("override '" + std::string(text) + "' is not key=value");
    const auto key = trim(text.substr(0, eq));
    if (key.find('.') == key.npos) fail("override key '" + std::string(key) + "' needs a section");
    return {std::string(key), std::string(trim(text.substr(eq + 1))), 0};
}

}  // namespace tdsr::app
