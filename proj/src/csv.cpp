#include "svcscale/csv.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace svcscale {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto begin = field.find_first_not_of(" \t\r");
    const auto end = field.find_last_not_of(" \t\r");
    fields.push_back(begin == std::string::npos ? "" : field.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

Index CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<Index>(i);
  throw DataError("missing column: " + name);
}

double CsvTable::numeric(size_t row, Index col) const {
  const std::string& s = rows[row][static_cast<size_t>(col)];
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw DataError("non-numeric cell '" + s + "' in column " + header[static_cast<size_t>(col)]);
  return v;
}

VectorXd CsvTable::numeric_column(const std::string& name) const {
  const Index col = column(name);
  VectorXd v(static_cast<Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) v[static_cast<Index>(r)] = numeric(r, col);
  return v;
}

CsvTable CsvTable::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

CsvTable CsvTable::parse(const std::string& text) {
  CsvTable t;
  std::stringstream ss(text);
  std::string line;
  bool haveHeader = false;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_line(line);
    if (!haveHeader) {
      t.header = std::move(fields);
      haveHeader = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw DataError("row with " + std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  if (!haveHeader) throw DataError("empty CSV: header row required");
  return t;
}

}  // namespace svcscale
