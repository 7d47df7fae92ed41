#include "config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "anisosplit/error.hpp"

namespace anisosplit::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<double> to_double(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& source) {
    Config c;
    c.source_ = source;
    c.text_ = text;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string t = trim(raw);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3)
                throw ConfigError(source + ":" + std::to_string(line) + ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            if (c.sections_.count(section))
                throw ConfigError(source + ":" + std::to_string(line) + ": duplicate section [" + section + "]");
            c.sections_[section];
            c.section_lines_[section] = line;
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(line) + ": expected key = value");
        if (section.empty())
            throw ConfigError(source + ":" + std::to_string(line) + ": entry outside of a section");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(line) + ": empty key");
        auto& entries = c.sections_[section];
        if (entries.count(key))
            throw ConfigError(source + ":" + std::to_string(line) + ": duplicate key '" + key + "'");
        entries[key] = Entry{trim(t.substr(eq + 1)), line};
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

void Config::require_section(const std::string& section) const {
    if (!has_section(section)) throw ConfigError(source_ + ": missing section [" + section + "]");
}

std::optional<Config::Entry> Config::find(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return std::nullopt;
    const auto e = s->second.find(key);
    if (e == s->second.end()) return std::nullopt;
    return e->second;
}

const Config::Entry& Config::get(const std::string& section, const std::string& key) const {
    require_section(section);
    const auto& entries = sections_.at(section);
    const auto e = entries.find(key);
    if (e == entries.end())
        throw ConfigError(source_ + ":" + std::to_string(section_lines_.at(section)) + ": [" + section +
                          "] is missing required field '" + key + "'");
    return e->second;
}

void Config::fail(const std::string& section, const std::string& key, const std::string& msg) const {
    const auto e = find(section, key);
    const std::string where = e ? ":" + std::to_string(e->line) : "";
    throw ConfigError(source_ + where + ": [" + section + "] " + key + ": " + msg);
}

std::string Config::get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
    const auto e = find(section, key);
    return e ? e->value : fallback;
}

int Config::get_int(const std::string& section, const std::string& key) const {
    const Entry& e = get(section, key);
    int v = 0;
    const char* end = e.value.data() + e.value.size();
    const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc() || ptr != end) fail(section, key, "expected an integer, got '" + e.value + "'");
    return v;
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
    return find(section, key) ? get_int(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    const Entry& e = get(section, key);
    const auto v = to_double(e.value);
    if (!v) fail(section, key, "expected a number, got '" + e.value + "'");
    return *v;
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
    return find(section, key) ? get_double(section, key) : fallback;
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key,
                                     const std::vector<double>& fallback) const {
    const auto e = find(section, key);
    if (!e) return fallback;
    std::vector<double> out;
    std::istringstream in(e->value);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto v = to_double(trim(item));
        if (!v) fail(section, key, "expected a comma separated list of numbers");
        out.push_back(*v);
    }
    if (out.empty()) fail(section, key, "empty list");
    return out;
}

}  // namespace anisosplit::cli
