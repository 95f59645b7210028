#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mcod/errors.hpp"

namespace mcod {

// Minimal CSV support: header + rows, comma-separated, optional RFC-style
// double-quoting. Lines starting with '#' are treated as comments (used for
// the manifest-hash line at the top of output files).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string source;

  int col(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }

  int require(const std::string& name) const {
    int c = col(name);
    if (c < 0) throw bad_schema(source, "missing required column '" + name + "'");
    return c;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
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
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

inline std::string quote_csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bad_schema(path, "cannot open file");
  CsvTable t;
  t.source = path;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = detail::split_csv_line(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != t.header.size())
        throw bad_schema(path, "row has " + std::to_string(fields.size()) +
                                   " fields, header has " +
                                   std::to_string(t.header.size()));
      t.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) throw bad_schema(path, "empty file (header required)");
  return t;
}

inline void write_csv(const std::string& path, const CsvTable& t,
                      const std::string& comment = "") {
  std::ofstream out(path);
  if (!out) throw bad_schema(path, "cannot open file for writing");
  if (!comment.empty()) out << "# " << comment << '\n';
  for (size_t i = 0; i < t.header.size(); ++i)
    out << (i ? "," : "") << detail::quote_csv_field(t.header[i]);
  out << '\n';
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << detail::quote_csv_field(row[i]);
    out << '\n';
  }
}

inline double parse_double(const std::string& s, const std::string& context) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw bad_schema(context, "cannot parse '" + s + "' as a number");
  }
}

inline int parse_int(const std::string& s, const std::string& context) {
  try {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw bad_schema(context, "cannot parse '" + s + "' as an integer");
  }
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace mcod
