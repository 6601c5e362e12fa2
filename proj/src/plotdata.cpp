#include "xrtrace/plotdata.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "xrtrace/errors.hpp"
#include "xrtrace/ingest.hpp"

namespace xrtrace {

const char* kArtifactVersion = "1.0.0";

void write_plot_data(const std::filesystem::path& path, const std::string& command,
                     const std::vector<std::pair<std::string, std::string>>& params,
                     const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows, bool with_timestamp) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write plot data file: " + path.string());
    out << "# command: " << command << "\n";
    for (const auto& [k, v] : params) out << "# " << k << ": " << v << "\n";
    out << "# version: " << kArtifactVersion << "\n";
    if (with_timestamp) {
        const auto now = std::chrono::system_clock::now();
        out << "# generated: "
            << std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()
            << "\n";
    }
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << "\n";
    for (const auto& row : rows) {
        if (row.size() != columns.size())
            throw Error("plot data row width " + std::to_string(row.size()) +
                        " does not match " + std::to_string(columns.size()) + " columns");
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "");
            if (std::isnan(row[i])) out << "nan";
            else if (std::isinf(row[i])) out << (row[i] > 0 ? "inf" : "-inf");
            else out << format_double(row[i]);
        }
        out << "\n";
    }
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace xrtrace
