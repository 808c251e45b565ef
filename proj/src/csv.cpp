#include "ptfa/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace ptfa::csv {

int Table::column_index(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw Error(ErrorCode::InvalidArgument, "no column named '" + name + "'");
  return static_cast<int>(it - columns.begin());
}

Matrix Table::select(const std::vector<std::string>& names) const {
  Matrix out(values.rows(), static_cast<Eigen::Index>(names.size()));
  for (size_t j = 0; j < names.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = values.col(column_index(names[j]));
  return out;
}

std::vector<std::string> Table::columns_except(const std::vector<std::string>& names) const {
  std::vector<std::string> out;
  for (const auto& c : columns) {
    if (std::find(names.begin(), names.end(), c) == names.end()) out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw Error(ErrorCode::ParseError, "unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan"; }

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

Table read(std::istream& in, const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::string line;
  int line_no = 0;
  std::vector<int> line_numbers;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') continue;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    try {
      fields = split_record(line);
    } catch (const Error&) {
      throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line_no) + ": unterminated quoted field");
    }
    for (auto& f : fields) f = trim(f);
    records.push_back(std::move(fields));
    line_numbers.push_back(line_no);
  }
  if (records.empty()) throw Error(ErrorCode::ParseError, source + ": missing header row");
  const std::vector<std::string>& header = records.front();
  const size_t width = header.size();
  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line_numbers[r]) + ": expected " +
                                             std::to_string(width) + " fields, found " +
                                             std::to_string(records[r].size()));
    }
  }

  bool labelled = false;
  const std::string first = lower(header.front());
  if (first == "date" || first == "t" || first == "variable" || first == "label") labelled = true;
  for (size_t r = 1; r < records.size() && !labelled; ++r) {
    const std::string& cell = records[r].front();
    if (!is_missing(cell) && !parse_number(cell)) labelled = true;
  }

  Table table;
  const size_t offset = labelled ? 1 : 0;
  if (labelled) table.label_name = header.front();
  table.columns.assign(header.begin() + static_cast<long>(offset), header.end());
  if (table.columns.empty()) throw Error(ErrorCode::ParseError, source + ": no numeric columns");
  const auto rows = static_cast<Eigen::Index>(records.size() - 1);
  table.values.resize(rows, static_cast<Eigen::Index>(table.columns.size()));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& rec = records[static_cast<size_t>(r) + 1];
    if (labelled) table.labels.push_back(rec.front());
    for (size_t j = offset; j < width; ++j) {
      const std::string& cell = rec[j];
      double v = std::numeric_limits<double>::quiet_NaN();
      if (!is_missing(cell)) {
        const auto parsed = parse_number(cell);
        if (!parsed) {
          throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line_numbers[static_cast<size_t>(r) + 1]) +
                                                 ": '" + cell + "' is not a number");
        }
        v = *parsed;
      }
      table.values(r, static_cast<Eigen::Index>(j - offset)) = v;
    }
  }
  return table;
}

Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  return read(in, path);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write(std::ostream& out, const Table& table) {
  out << kVersionLine << '\n';
  bool first = true;
  if (table.has_labels()) {
    out << quote(table.label_name);
    first = false;
  }
  for (const auto& c : table.columns) {
    if (!first) out << ',';
    out << quote(c);
    first = false;
  }
  out << '\n';
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    first = true;
    if (table.has_labels()) {
      out << quote(table.labels[static_cast<size_t>(r)]);
      first = false;
    }
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
      if (!first) out << ',';
      out << format_number(table.values(r, j));
      first = false;
    }
    out << '\n';
  }
}

void write_file(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  write(out, table);
}

}  // namespace ptfa::csv
