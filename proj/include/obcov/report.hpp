#pragma once

#include "obcov/experiments.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace obcov {

/// Header `sweep,estimator,mean_error,std_error,trials`, floats at 17
/// significant digits.
std::string result_table_csv(const ResultTable& table);

/// {"config": ..., "sweep": ..., "rows": [...], "annotations": {...}}
nlohmann::ordered_json result_table_json(const ResultTable& table, const nlohmann::ordered_json& config);

void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace obcov
