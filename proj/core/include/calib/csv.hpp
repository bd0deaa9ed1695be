#pragma once

#include <string>
#include <vector>

#include "calib/types.hpp"

namespace calib {

struct CsvTable {
  std::vector<std::string> header;
  MatrixXd data;

  int columnIndex(const std::string& name) const;  // -1 when absent
  VectorXd column(const std::string& name) const;  // throws when absent
};

// Comma-separated, '.' decimal, first row headers, numeric body.
CsvTable readCsv(const std::string& path);
void writeCsv(const std::string& path, const std::vector<std::string>& header,
              const MatrixXd& data);

}  // namespace calib
