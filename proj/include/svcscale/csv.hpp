#pragma once

#include "svcscale/types.hpp"

#include <string>
#include <vector>

namespace svcscale {

// Minimal numeric CSV table: header row required, '.' decimal separator,
// columns addressed by name. Lines starting with '#' are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Index column(const std::string& name) const;  // throws DataError when absent
  double numeric(size_t row, Index col) const;  // throws DataError on non-numeric
  VectorXd numeric_column(const std::string& name) const;

  static CsvTable read_file(const std::string& path);
  static CsvTable parse(const std::string& text);
};

}  // namespace svcscale
