#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fsgauge {

/// Writes `text` to `path`, creating parent directories. Throws DataError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

struct ScatterSeries {
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal SVG scatter plot with labeled axes and min/max ticks.
std::string scatter_svg(const ScatterSeries& series, const std::string& x_label, const std::string& y_label,
                        const std::string& title = "");

/// Same frame with points joined in order (ROC curves, sweeps).
std::string line_svg(const ScatterSeries& series, const std::string& x_label, const std::string& y_label,
                     const std::string& title = "");

}  // namespace fsgauge
