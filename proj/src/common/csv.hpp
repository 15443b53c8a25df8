#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace ranopt::csv {

/// Shortest round-trippable representation of a double. CSVs are written
/// with this so every reported figure can be recomputed bit-exactly.
std::string fmt(double v);

/// Minimal writer; rows are comma-joined, no quoting (all fields are numeric or
/// plain identifiers).
class Writer {
public:
    explicit Writer(const std::string& path);
    ~Writer();
    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;

    void header(const std::vector<std::string>& cols);
    void row(const std::vector<std::string>& fields);
    /// Flushes and closes; later rows throw. The destructor closes silently.
    void close();

private:
    std::FILE* f_ = nullptr;
    std::string path_;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws if missing.
    std::size_t col(const std::string& name) const;
    std::vector<double> numeric(const std::string& name) const;
};

Table read(const std::string& path);

} // namespace ranopt::csv
