#include "tscp/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace tscp {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

double parse_double(const std::string& cell, std::size_t line_no,
                    const std::string& column) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                 ", column '" + column + "': cannot parse '" +
                                 cell + "' as a number");
    }
    return value;
}

std::int64_t parse_int(const std::string& cell, std::size_t line_no,
                       const std::string& column) {
    std::int64_t value = 0;
    auto [ptr, ec] =
        std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                 ", column '" + column + "': cannot parse '" +
                                 cell + "' as an integer");
    }
    return value;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw std::runtime_error("csv: missing column '" + name + "'");
}

CsvTable read_csv_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv file: " + path);
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("csv: empty file: " + path);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    CsvTable table;
    table.header = split_line(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != table.header.size()) {
            throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                     ": cell count differs from header");
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path());
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open for writing: " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out.flush()) {
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        throw std::runtime_error("rename to " + target.string() +
                                 " failed: " + ec.message());
    }
}

CsvSeries read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv file: " + path);

    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("csv: empty file: " + path);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_line(line);

    // column layout: t, y, [y_hat], x0..x{m-1}, [regime]
    std::size_t col = 0;
    auto expect = [&](const std::string& name) {
        if (col >= header.size() || header[col] != name) {
            throw std::runtime_error("csv: expected column '" + name +
                                     "' at position " + std::to_string(col) +
                                     " in " + path);
        }
        ++col;
    };
    expect("t");
    expect("y");
    bool has_y_hat = false;
    if (col < header.size() && header[col] == "y_hat") {
        has_y_hat = true;
        ++col;
    }
    std::size_t n_features = 0;
    while (col < header.size() && header[col] == "x" + std::to_string(n_features)) {
        ++n_features;
        ++col;
    }
    bool has_regime = false;
    if (col < header.size() && header[col] == "regime") {
        has_regime = true;
        ++col;
    }
    if (col != header.size()) {
        throw std::runtime_error("csv: unexpected column '" + header[col] +
                                 "' in " + path);
    }
    const std::size_t n_cols = header.size();

    std::vector<std::int64_t> ts;
    std::vector<double> y, y_hat, x;
    std::vector<int> regime;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != n_cols) {
            throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(n_cols) +
                                     " cells, found " + std::to_string(cells.size()));
        }
        std::size_t c = 0;
        ts.push_back(parse_int(cells[c++], line_no, "t"));
        y.push_back(parse_double(cells[c++], line_no, "y"));
        if (has_y_hat) y_hat.push_back(parse_double(cells[c++], line_no, "y_hat"));
        for (std::size_t j = 0; j < n_features; ++j) {
            x.push_back(parse_double(cells[c++], line_no, header[2 + (has_y_hat ? 1 : 0) + j]));
        }
        if (has_regime) {
            regime.push_back(static_cast<int>(parse_int(cells[c++], line_no, "regime")));
        }
    }
    const std::size_t t_len = ts.size();
    if (t_len == 0) throw std::runtime_error("csv: no data rows in " + path);

    CsvSeries out;
    out.data.timestamps = std::move(ts);
    out.data.targets = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(t_len));
    out.data.features.resize(static_cast<Eigen::Index>(t_len),
                             static_cast<Eigen::Index>(n_features));
    for (std::size_t i = 0; i < t_len; ++i) {
        for (std::size_t j = 0; j < n_features; ++j) {
            out.data.features(static_cast<Eigen::Index>(i),
                              static_cast<Eigen::Index>(j)) = x[i * n_features + j];
        }
    }
    if (has_y_hat) {
        Eigen::VectorXd preds = Eigen::Map<const Eigen::VectorXd>(
            y_hat.data(), static_cast<Eigen::Index>(t_len));
        out.data.predictions = preds;
        out.data.errors = out.data.targets - preds;
    }
    out.regime = std::move(regime);
    out.data.validate();
    return out;
}

void write_series_csv(const std::string& path, const TimeSeriesDataset& data,
                      const std::vector<int>* regime) {
    data.validate();
    if (regime && static_cast<Eigen::Index>(regime->size()) != data.size()) {
        throw std::invalid_argument("write_series_csv: regime length mismatch");
    }
    std::string out;
    out.reserve(static_cast<std::size_t>(data.size()) * 32);
    out += "t,y";
    if (data.has_predictions()) out += ",y_hat";
    for (Eigen::Index j = 0; j < data.n_features(); ++j) {
        out += ",x" + std::to_string(j);
    }
    if (regime) out += ",regime";
    out += '\n';
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        out += std::to_string(data.timestamps[static_cast<std::size_t>(i)]);
        out += ',';
        out += format_double(data.targets[i]);
        if (data.has_predictions()) {
            out += ',';
            out += format_double(data.predictions[i]);
        }
        for (Eigen::Index j = 0; j < data.n_features(); ++j) {
            out += ',';
            out += format_double(data.features(i, j));
        }
        if (regime) {
            out += ',';
            out += std::to_string((*regime)[static_cast<std::size_t>(i)]);
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

}  // namespace tscp
