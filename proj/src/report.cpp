#include "obcov/report.hpp"

#include "obcov/error.hpp"
#include "obcov/matrix_io.hpp"

#include <fstream>
#include <sstream>

namespace obcov {

std::string result_table_csv(const ResultTable& table) {
    std::ostringstream out;
    out << "sweep,estimator,mean_error,std_error,trials\n";
    for (const auto& r : table.rows) {
        out << format_double(r.sweep) << ',' << r.estimator << ',' << format_double(r.mean_error) << ','
            << format_double(r.std_error) << ',' << r.trials << '\n';
    }
    return out.str();
}

nlohmann::ordered_json result_table_json(const ResultTable& table, const nlohmann::ordered_json& config) {
    nlohmann::ordered_json doc;
    doc["config"] = config;
    doc["sweep"] = table.sweep_name;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"sweep", r.sweep},
                        {"estimator", r.estimator},
                        {"mean_error", r.mean_error},
                        {"std_error", r.std_error},
                        {"trials", r.trials}});
    }
    doc["rows"] = std::move(rows);
    auto notes = nlohmann::ordered_json::object();
    for (const auto& [k, v] : table.annotations) notes[k] = v;
    doc["annotations"] = std::move(notes);
    return doc;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

} // namespace obcov
