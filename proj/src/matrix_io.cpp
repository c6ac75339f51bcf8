#include "obcov/matrix_io.hpp"

#include "obcov/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace obcov {

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
    out.clear();
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t end = line.find(',', pos);
        if (end == std::string::npos) end = line.size();
        std::size_t b = pos, e = end;
        while (b < e && (line[b] == ' ' || line[b] == '\t')) ++b;
        while (e > b && (line[e - 1] == ' ' || line[e - 1] == '\t' || line[e - 1] == '\r')) --e;
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(line.data() + b, line.data() + e, v);
        if (b == e || ec != std::errc{} || ptr != line.data() + e) return false;
        out.push_back(v);
        pos = end + 1;
    }
    return !out.empty();
}

} // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
    write_matrix_csv(out, m);
    if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

Matrix read_matrix_csv(std::istream& in) {
    std::vector<double> data;
    std::vector<double> row;
    std::size_t rows = 0, cols = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!parse_row(line, row)) break;
        if (rows == 0) cols = row.size();
        if (row.size() != cols)
            throw Error(Errc::ShapeMismatch, "row " + std::to_string(rows) + " has " + std::to_string(row.size()) +
                                                 " columns, expected " + std::to_string(cols));
        data.insert(data.end(), row.begin(), row.end());
        ++rows;
    }
    if (rows == 0) throw Error(Errc::EmptyInput, "no matrix rows found");
    return Matrix(rows, cols, std::move(data));
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    return read_matrix_csv(in);
}

} // namespace obcov
