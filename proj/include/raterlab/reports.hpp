#pragma once

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "raterlab/errors.hpp"

namespace raterlab {

// Fixed-point formatting (printf is locale-stable for "C" default).
inline std::string fmt_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

// The only place timestamps are allowed: a comment header line. Consumers
// that diff reports strip lines starting with "# generated:".
inline std::string generated_header() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string("# generated: ") + buf + "\n";
}

// Right-pads / left-pads cells into an aligned monospace table.
class TextTable {
public:
    void add_row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

    // Column 0 is left-aligned, the rest right-aligned.
    std::string render() const {
        std::vector<std::size_t> width;
        for (const auto& row : rows_) {
            if (width.size() < row.size()) width.resize(row.size(), 0);
            for (std::size_t i = 0; i < row.size(); ++i)
                width[i] = std::max(width[i], row[i].size());
        }
        std::ostringstream out;
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out << "  ";
                if (i == 0) {
                    out << row[i]
                        << std::string(width[i] - row[i].size(), ' ');
                } else {
                    out << std::string(width[i] - row[i].size(), ' ')
                        << row[i];
                }
            }
            out << '\n';
        }
        return out.str();
    }

private:
    std::vector<std::vector<std::string>> rows_;
};

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ParseError("cannot create directory " + dir + ": " + ec.message());
}

inline void write_report(const std::string& path, const std::string& body,
                         bool with_timestamp = true) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    if (with_timestamp) out << generated_header();
    out << body;
}

} // namespace raterlab
