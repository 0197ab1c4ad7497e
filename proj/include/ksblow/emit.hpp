#pragma once

// Deterministic CSV / JSON / SVG output. Numbers use the shortest
// round-trip decimal, so identical inputs give identical bytes.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ksblow {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Header line plus one line per row; non-finite values print as nan/inf.
std::string to_csv(const Table& t);

/// {"columns": [...], "rows": [[...], ...]} with null for non-finite values.
nlohmann::json to_json(const Table& t);

/// Finite doubles as numbers, everything else as null.
nlohmann::json json_number(double x);

/// Two-space indented dump with a trailing newline.
std::string dump(const nlohmann::json& j);

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title, x_label, y_label;
  bool log_x = false, log_y = false;
  std::vector<PlotSeries> series;
  std::vector<double> h_lines;  // horizontal reference lines
};

/// Static SVG line plot; points that are non-finite or not positive on a log
/// axis are skipped.
std::string to_svg(const PlotSpec& p);

/// Writes the file, creating parent directories. Throws DomainError naming
/// the path on failure.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace ksblow
