#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace liqtimer {

/// Shortest text that round-trips (17 significant digits).
std::string format_double(double v);

struct CsvMeta {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string command;
};

/// CSV file with a leading comment line "# config_hash=... seed=... command=..."
/// then a header row.  UNIX newlines.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const CsvMeta& meta, const std::vector<std::string>& columns);
    void row(const std::vector<double>& values);
    void row(const std::vector<std::string>& cells);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t columns_;
};

} // namespace liqtimer
