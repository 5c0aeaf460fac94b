#include "liqtimer/csv.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace liqtimer {

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const CsvMeta& meta, const std::vector<std::string>& columns)
    : path_(path), out_(path, std::ios::binary), columns_(columns.size())
{
    if (!out_)
        throw std::runtime_error("cannot write " + path);
    out_ << "# config_hash=" << meta.config_hash << " seed=" << meta.seed << " command=" << meta.command << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i)
        out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values)
{
    if (values.size() != columns_)
        throw std::logic_error("CSV row width mismatch in " + path_);
    for (std::size_t i = 0; i < values.size(); ++i)
        out_ << (i ? "," : "") << format_double(values[i]);
    out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells)
{
    if (cells.size() != columns_)
        throw std::logic_error("CSV row width mismatch in " + path_);
    for (std::size_t i = 0; i < cells.size(); ++i)
        out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
}

} // namespace liqtimer
