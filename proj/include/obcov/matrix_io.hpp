#pragma once

#include "obcov/linalg.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace obcov {

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

/// One row per line, comma separated.
void write_matrix_csv(std::ostream& out, const Matrix& m);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// Reads rows of comma-separated numbers up to the first blank or
/// non-numeric line. Throws IoError on a missing file and ShapeMismatch on
/// ragged rows.
Matrix read_matrix_csv(std::istream& in);
Matrix read_matrix_csv(const std::filesystem::path& path);

} // namespace obcov
