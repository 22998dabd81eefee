#pragma once

// Minimal CSV reading/writing: comma separated, optional double-quoted fields, header row.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "latent_evi/errors.hpp"

namespace latent_evi::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw InvalidArgument("CSV has no column '" + std::string(name) + "'");
    }
};

inline std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

inline Table parse(std::istream& in, const std::string& source = "<stream>") {
    Table t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw InvalidArgument(source + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(t.header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) throw InvalidArgument(source + ": missing CSV header");
    return t;
}

inline Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    return parse(in, path);
}

/// Round-trippable decimal form; NaN is written as an empty cell.
inline std::string format(double v) {
    if (std::isnan(v)) return {};
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Parses a numeric cell; empty or "nan" gives NaN.
inline double parse_double(const std::string& s, const std::string& context = {}) {
    if (s.empty() || s == "nan" || s == "NaN" || s == "NA") return std::nan("");
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw InvalidArgument("not a number: '" + s + "'" + (context.empty() ? "" : " in " + context));
    return v;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        const auto& f = fields[i];
        if (f.find_first_of(",\"\n") != std::string::npos) {
            out << '"';
            for (char c : f) out << (c == '"' ? std::string("\"\"") : std::string(1, c));
            out << '"';
        } else {
            out << f;
        }
    }
    out << '\n';
}

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), out_(path) {
        if (!out_) throw Error("cannot write '" + path + "'");
    }

    void row(const std::vector<std::string>& fields) { write_row(out_, fields); }

    void close() {
        out_.close();
        if (!out_) throw Error("error while writing '" + path_ + "'");
    }

private:
    std::string path_;
    std::ofstream out_;
};

}  // namespace latent_evi::csv
