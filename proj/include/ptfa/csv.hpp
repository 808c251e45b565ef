#pragma once

// Numeric CSV panels: header row required, an optional leading label column
// (dates or names, passed through as strings), empty cells or NA read as NaN.
// Lines starting with '#' are comments.

#include <iosfwd>
#include <string>
#include <vector>

#include "ptfa/core.hpp"

namespace ptfa::csv {

inline constexpr const char* kVersionLine = "# ptfa 0.1.0";

struct Table {
  std::string label_name;           // empty when there is no label column
  std::vector<std::string> labels;  // one per row when present
  std::vector<std::string> columns;
  Matrix values;

  bool has_labels() const { return !label_name.empty(); }
  int column_index(const std::string& name) const;
  Matrix select(const std::vector<std::string>& names) const;
  std::vector<std::string> columns_except(const std::vector<std::string>& names) const;
};

/// Splits one record on commas, honoring double quotes.
std::vector<std::string> split_record(const std::string& line);

/// The first column is a label column when its header is "date", "t",
/// "variable" or "label", or when any of its cells is neither numeric nor missing.
Table read(std::istream& in, const std::string& source = "<stream>");
Table read_file(const std::string& path);

std::string format_number(double v);

/// Writes the version line, then the header and rows; NaN is written as NA.
void write(std::ostream& out, const Table& table);
void write_file(const std::string& path, const Table& table);

}  // namespace ptfa::csv
