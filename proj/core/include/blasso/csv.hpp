#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace blasso {

// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

// In-memory CSV table with a fixed header; written with '\n' line endings.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    class Row {
    public:
        Row& add(double v);
        Row& add(long v);
        Row& add(int v) { return add(static_cast<long>(v)); }
        Row& add(std::uint64_t v);
        Row& add(bool v);
        Row& add(const std::string& v);
        Row& add(const char* v) { return add(std::string(v)); }

    private:
        friend class CsvTable;
        explicit Row(std::vector<std::string>& cells) : cells_(cells) {}
        std::vector<std::string>& cells_;
    };

    // Cells of the new row are appended through the returned handle; the row
    // must end up with exactly header().size() cells before write().
    Row row();

    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }
    std::string str() const;
    void write(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// Writes `text` to `path`, replacing any existing file.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace blasso
