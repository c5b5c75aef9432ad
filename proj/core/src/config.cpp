#include "blasso/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace blasso {
namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i)
        if (i == s.size() || s[i] == ',') {
            out.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    return out;
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_long(std::string_view s, long& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return true;
    // Integral values in exponent notation, e.g. 1e5.
    double d = 0.0;
    if (parse_double(s, d) && d == std::floor(d) && std::abs(d) < 9.0e18) {
        out = static_cast<long>(d);
        return true;
    }
    return false;
}

}  // namespace

ConfigError::ConfigError(const std::string& message, int line, int column)
    : Error(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message
                     : message),
      line_(line),
      column_(column) {}

Config Config::parse(std::string_view text) {
    Config cfg;
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, eol - pos);
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const std::size_t hash = line.find('#');
        const std::string_view body = line.substr(0, hash);

        std::size_t i = 0;
        auto skip_ws = [&] {
            while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
        };
        skip_ws();
        if (i < body.size()) {
            const std::size_t key_start = i;
            int components = 0;
            while (true) {
                if (i >= body.size() || !ident_start(body[i]))
                    throw ConfigError("expected identifier in key", lineno, static_cast<int>(i) + 1);
                while (i < body.size() && ident_char(body[i])) ++i;
                ++components;
                if (i < body.size() && body[i] == '.') {
                    ++i;
                    continue;
                }
                break;
            }
            const std::string key(body.substr(key_start, i - key_start));
            if (components < 2)
                throw ConfigError("key must have the form section.key", lineno, static_cast<int>(key_start) + 1);
            skip_ws();
            if (i >= body.size() || body[i] != '=')
                throw ConfigError("expected '=' after key", lineno, static_cast<int>(i) + 1);
            ++i;
            skip_ws();
            const std::string_view value = trim(body.substr(i));
            if (value.empty()) throw ConfigError("missing value", lineno, static_cast<int>(i) + 1);
            if (cfg.entries_.count(key))
                throw ConfigError("duplicate key '" + key + "' (first on line " +
                                      std::to_string(cfg.entries_.at(key).line) + ")",
                                  lineno, static_cast<int>(key_start) + 1);
            cfg.entries_[key] = Entry{std::string(value), lineno, static_cast<int>(i) + 1};
        }
        if (eol >= text.size()) break;
        pos = eol + 1;
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'", 0, 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

void Config::set(const std::string& key, const std::string& value) {
    auto it = entries_.find(key);
    if (it == entries_.end())
        entries_[key] = Entry{value, 0, 0};
    else
        it->second.value = value;
}

const Config::Entry& Config::entry(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'", 0, 0);
    used_.insert(key);
    return it->second;
}

void Config::fail(const std::string& key, const std::string& message) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(key + ": " + message, 0, 0);
    throw ConfigError(key + ": " + message, it->second.line, it->second.column);
}

std::string Config::get_string(const std::string& key) const { return entry(key).value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const {
    double v = 0.0;
    if (!parse_double(entry(key).value, v)) fail(key, "expected a finite number, got '" + entry(key).value + "'");
    return v;
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long Config::get_long(const std::string& key) const {
    long v = 0;
    if (!parse_long(entry(key).value, v)) fail(key, "expected an integer, got '" + entry(key).value + "'");
    return v;
}

long Config::get_long(const std::string& key, long fallback) const { return has(key) ? get_long(key) : fallback; }

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string& s = entry(key).value;
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(key, "expected a non-negative integer, got '" + s + "'");
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& s = entry(key).value;
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    fail(key, "expected true or false, got '" + s + "'");
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto item : split_list(entry(key).value)) {
        double v = 0.0;
        if (!parse_double(item, v)) fail(key, "expected a list of finite numbers, got '" + std::string(item) + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<double> Config::get_double_list(const std::string& key, const std::vector<double>& fallback) const {
    return has(key) ? get_double_list(key) : fallback;
}

std::vector<long> Config::get_long_list(const std::string& key) const {
    std::vector<long> out;
    for (const auto item : split_list(entry(key).value)) {
        long v = 0;
        if (!parse_long(item, v)) fail(key, "expected a list of integers, got '" + std::string(item) + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> Config::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    const std::string p = prefix + ".";
    for (const auto& [k, e] : entries_)
        if (k.compare(0, p.size(), p) == 0) out.push_back(k);
    return out;
}

void Config::reject_unused() const {
    for (const auto& [k, e] : entries_)
        if (!used_.count(k)) throw ConfigError("unknown key '" + k + "'", e.line, 1);
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, e] : entries_) out += k + " = " + e.value + "\n";
    return out;
}

}  // namespace blasso
