#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace anisosplit::cli {

/// Sectioned key = value file. Values are kept verbatim (trimmed); '#' and
/// ';' start comment lines. Every entry remembers its line number.
class Config {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static Config parse(const std::string& text, const std::string& source = "config");
    static Config load(const std::string& path);

    bool has_section(const std::string& section) const { return sections_.count(section) != 0; }
    void require_section(const std::string& section) const;

    std::optional<Entry> find(const std::string& section, const std::string& key) const;
    const Entry& get(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    int get_int(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    std::vector<double> get_list(const std::string& section, const std::string& key,
                                 const std::vector<double>& fallback) const;

    /// ConfigError naming the source, line and field.
    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& msg) const;

    const std::string& text() const { return text_; }
    const std::string& source() const { return source_; }

private:
    std::string source_;
    std::string text_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::map<std::string, int> section_lines_;
};

}  // namespace anisosplit::cli
