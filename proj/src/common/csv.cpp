#include "common/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "common/hash.hpp"

namespace ranopt {

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("io", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return hex64(fnv1a64(ss.str()));
}

namespace csv {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Writer::Writer(const std::string& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_) throw Error("io", "cannot open for writing: " + path);
}

Writer::~Writer() {
    if (f_) std::fclose(f_);
}

void Writer::close() {
    if (!f_) return;
    const int rc = std::fclose(f_);
    f_ = nullptr;
    if (rc != 0) throw Error("io", "write failed: " + path_);
}

void Writer::header(const std::vector<std::string>& cols) { row(cols); }

void Writer::row(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += fields[i];
    }
    line += '\n';
    if (!f_) throw Error("io", "write after close: " + path_);
    if (std::fwrite(line.data(), 1, line.size(), f_) != line.size())
        throw Error("io", "write failed: " + path_);
}

std::size_t Table::col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw Error("io", "missing CSV column '" + name + "'");
}

std::vector<double> Table::numeric(const std::string& name) const {
    const auto c = col(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (c >= r.size()) throw Error("io", "short CSV row");
        const auto& s = r[c];
        if (s.empty() || s == "nan") {
            out.push_back(std::nan(""));
            continue;
        }
        double v = 0.0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc()) throw Error("io", "not a number in column '" + name + "': " + s);
        out.push_back(v);
    }
    return out;
}

static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("io", "required file not found: " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw Error("io", "empty CSV: " + path);
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split(line));
    }
    return t;
}

} // namespace csv
} // namespace ranopt
