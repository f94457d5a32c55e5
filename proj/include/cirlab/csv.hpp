#pragma once

// Comma-separated output. The header names every column with its unit in
// brackets; numbers use the shortest exact round-trip form, so identical runs
// produce identical bytes. Each row is flushed as soon as it is written.

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "cirlab/errors.hpp"

namespace cirlab {

struct CsvColumn {
    std::string name;
    std::string unit;  // "1" for dimensionless, empty for text and flags
};

inline std::string csv_cell(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string csv_cell(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string csv_cell(const char* s) { return csv_cell(std::string_view(s)); }
inline std::string csv_cell(const std::string& s) { return csv_cell(std::string_view(s)); }
inline std::string csv_cell(bool b) { return b ? "1" : "0"; }

template <class I, std::enable_if_t<std::is_integral_v<I> && !std::is_same_v<I, bool>, int> = 0>
std::string csv_cell(I v) {
    return std::to_string(v);
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, std::vector<CsvColumn> columns) : columns_(std::move(columns)), out_(path) {
        if (!out_) throw ArgumentError("cannot open " + path + " for writing");
        std::vector<std::string> head;
        for (const auto& c : columns_) head.push_back(csv_cell(c.unit.empty() ? c.name : c.name + " [" + c.unit + "]"));
        commit(head, false);
    }

    template <class... Ts>
    void write(const Ts&... cells) {
        commit({csv_cell(cells)...}, true);
    }

    std::size_t rows() const { return rows_; }

private:
    void commit(const std::vector<std::string>& cells, bool count) {
        if (cells.size() != columns_.size())
            throw ArgumentError("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                                std::to_string(columns_.size()));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
        out_.flush();
        if (count) ++rows_;
    }

    std::vector<CsvColumn> columns_;
    std::ofstream out_;
    std::size_t rows_ = 0;
};

} // namespace cirlab
