#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraudlab/matrix.hpp"

namespace fraudlab {

struct Dataset {
  Matrix features;                    // n x d
  std::vector<int> labels;            // 0 / 1
  std::vector<std::string> columns;   // d feature names, original order
};

namespace detail {

// Splits one CSV line on commas and strips optional surrounding double
// quotes (the Kaggle dump quotes its header and the Class column).
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (std::string& f : out) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ' || f.back() == '\t'))
      f.pop_back();
    std::size_t start = 0;
    while (start < f.size() && (f[start] == ' ' || f[start] == '\t')) ++start;
    if (start) f.erase(0, start);
    if (f.size() >= 2 && f.front() == '"' && f.back() == '"')
      f = f.substr(1, f.size() - 2);
  }
  return out;
}

inline double parse_double(const std::string& s, std::size_t line_no,
                           const std::string& col) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw std::runtime_error("csv line " + std::to_string(line_no) +
                             ": cannot parse numeric value '" + s + "' in column " + col);
  return v;
}

}  // namespace detail

// Reads a labeled CSV. The header must contain a Class column (anywhere);
// all other columns become features in header order. Class values must be
// exactly 0 or 1. Any malformed row is a hard error: silent row dropping
// would bias the class ratio, which is the one thing this dataset has going
// for it.
inline Dataset parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv file: " + path);
  std::vector<std::string> header = detail::split_csv_line(line);
  std::size_t class_col = header.size();
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == "Class") class_col = j;
  if (class_col == header.size())
    throw std::runtime_error("csv header has no Class column: " + path);

  Dataset ds;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != class_col) ds.columns.push_back(header[j]);

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
    std::vector<double> feat;
    feat.reserve(header.size() - 1);
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j == class_col) {
        if (fields[j] == "0")
          ds.labels.push_back(0);
        else if (fields[j] == "1")
          ds.labels.push_back(1);
        else
          throw std::runtime_error("csv line " + std::to_string(line_no) +
                                   ": Class must be 0 or 1, got '" + fields[j] + "'");
      } else {
        feat.push_back(detail::parse_double(fields[j], line_no, header[j]));
      }
    }
    rows.push_back(std::move(feat));
  }
  if (rows.empty()) throw std::runtime_error("csv has no data rows: " + path);
  ds.features = Matrix::from_rows(rows);
  check_finite(ds.features, "csv features");
  return ds;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Writes features + Class (+ optional is_synthetic flag column) with full
// round-trip precision.
inline void write_csv(const std::string& path, const Matrix& features,
                      const std::vector<int>& labels,
                      const std::vector<std::string>& columns,
                      const std::vector<int>* is_synthetic = nullptr) {
  if (features.rows != labels.size())
    throw std::invalid_argument("write_csv: row/label count mismatch");
  if (features.cols != columns.size())
    throw std::invalid_argument("write_csv: column name count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (std::size_t j = 0; j < columns.size(); ++j) out << columns[j] << ",";
  out << "Class";
  if (is_synthetic) out << ",is_synthetic";
  out << "\n";
  for (std::size_t i = 0; i < features.rows; ++i) {
    for (std::size_t j = 0; j < features.cols; ++j)
      out << format_double(features(i, j)) << ",";
    out << labels[i];
    if (is_synthetic) out << "," << (*is_synthetic)[i];
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::size_t count_class(const std::vector<int>& labels, int cls) {
  std::size_t n = 0;
  for (int y : labels)
    if (y == cls) ++n;
  return n;
}

}  // namespace fraudlab
