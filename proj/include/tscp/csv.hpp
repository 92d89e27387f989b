#pragma once

#include "tscp/types.hpp"

#include <optional>
#include <string>

// CSV ingestion/serialization for TimeSeriesDataset.
//
// Layout: header row `t,y,y_hat,x0,...,x{m-1}`, comma separated, `.` decimal
// point, UTF-8, no quoting.  `t` holds integer step indices, everything else
// parses as double.  The `y_hat` column is optional: datasets without base
// model predictions omit it.  A trailing `regime` column (emitted by the
// synthetic generator as a diagnostic) is carried through when present and
// ignored by consumers.  Missing or non-numeric cells are rejected, never
// imputed.  Doubles are written with shortest round-trip formatting, so a
// write/read cycle reproduces values bit-for-bit.

namespace tscp {

struct CsvSeries {
    TimeSeriesDataset data;
    std::vector<int> regime;  // empty unless the file had a regime column
};

CsvSeries read_series_csv(const std::string& path);

void write_series_csv(const std::string& path, const TimeSeriesDataset& data,
                      const std::vector<int>* regime = nullptr);

// Generic comma-separated table, for consumers that pick columns by header
// name (e.g. re-scoring interval files).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // index of a header column; throws std::runtime_error when absent
    std::size_t column(const std::string& name) const;
};

CsvTable read_csv_table(const std::string& path);

// Shortest-round-trip decimal rendering of a double (std::to_chars).
std::string format_double(double v);

// Writes `content` to `path` via a temp file in the same directory followed
// by an atomic rename, so readers never observe partial output.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace tscp
