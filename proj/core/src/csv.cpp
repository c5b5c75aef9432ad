#include "blasso/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "blasso/error.hpp"

namespace blasso {
namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable::Row CsvTable::row() {
    rows_.emplace_back();
    rows_.back().reserve(header_.size());
    return Row(rows_.back());
}

CsvTable::Row& CsvTable::Row::add(double v) {
    cells_.push_back(format_double(v));
    return *this;
}
CsvTable::Row& CsvTable::Row::add(long v) {
    cells_.push_back(std::to_string(v));
    return *this;
}
CsvTable::Row& CsvTable::Row::add(std::uint64_t v) {
    cells_.push_back(std::to_string(v));
    return *this;
}
CsvTable::Row& CsvTable::Row::add(bool v) {
    cells_.push_back(v ? "1" : "0");
    return *this;
}
CsvTable::Row& CsvTable::Row::add(const std::string& v) {
    cells_.push_back(quote(v));
    return *this;
}

std::string CsvTable::str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    std::vector<std::string> h;
    for (const auto& c : header_) h.push_back(quote(c));
    line(h);
    for (const auto& r : rows_) {
        if (r.size() != header_.size()) throw PreconditionError("csv row width does not match header");
        line(r);
    }
    return out;
}

void CsvTable::write(const std::string& path) const { write_text_file(path, str()); }

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace blasso
