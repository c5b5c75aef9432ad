#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "blasso/error.hpp"

namespace blasso {

// Parse or validation failure tied to a position in the config text.
// Line and column are 1-based; 0 means no position applies.
class ConfigError : public Error {
public:
    ConfigError(const std::string& message, int line, int column);
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

// Line-oriented `section.key = value` configuration.
//
//   file    := { line '\n' }
//   line    := ws [ entry ] ws [ '#' comment ]
//   entry   := key ws '=' ws value
//   key     := ident { '.' ident }        at least two components
//   ident   := [A-Za-z_][A-Za-z0-9_]*
//   value   := any characters up to '#' or end of line, trimmed; non-empty
//
// Lists are comma-separated values. Duplicate keys are errors.
class Config {
public:
    struct Entry {
        std::string value;
        int line = 0;
        int column = 0;  // column of the first value character
    };

    static Config parse(std::string_view text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key) const;
    long get_long(const std::string& key, long fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<long> get_long_list(const std::string& key) const;

    // Keys under `prefix.` (e.g. all `scenario.atom0.*`).
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
    // Throws for the first key never read through a getter.
    void reject_unused() const;

    // Throws ConfigError positioned at `key`'s value.
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

    // Every entry as `key = value`, sorted by key.
    std::string canonical() const;

private:
    const Entry& entry(const std::string& key) const;
    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> used_;
};

}  // namespace blasso
