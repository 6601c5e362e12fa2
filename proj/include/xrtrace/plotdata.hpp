#ifndef XRTRACE_PLOTDATA_HPP
#define XRTRACE_PLOTDATA_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace xrtrace {

// Self-describing plot-data file: '#' header lines (command, parameters,
// artifact version, optional timestamp), a column-name row, then
// comma-separated numeric rows. Deterministic for fixed inputs when the
// timestamp is suppressed.
void write_plot_data(const std::filesystem::path& path, const std::string& command,
                     const std::vector<std::pair<std::string, std::string>>& params,
                     const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows, bool with_timestamp);

extern const char* kArtifactVersion;

}  // namespace xrtrace

#endif
