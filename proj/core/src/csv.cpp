#include "calib/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "calib/errors.hpp"

namespace calib {

int CsvTable::columnIndex(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

VectorXd CsvTable::column(const std::string& name) const {
  const int idx = columnIndex(name);
  if (idx < 0) throw DataFormatError("CSV column '" + name + "' not found");
  return data.col(idx);
}

namespace {

std::vector<std::string> splitLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parseNumber(const std::string& field, const std::string& path, int line) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  while (ptr < end && (*ptr == ' ' || *ptr == '\t' || *ptr == '\r')) ++ptr;
  if (ec != std::errc{} || ptr != end)
    throw DataFormatError(path + ":" + std::to_string(line) + ": not a number: '" + field + "'");
  return value;
}

}  // namespace

CsvTable readCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open '" + path + "'");

  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw DataFormatError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = splitLine(line);
  const size_t cols = table.header.size();
  if (cols == 0) throw DataFormatError(path + ": empty header");

  std::vector<double> values;
  int rows = 0;
  int lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = splitLine(line);
    if (fields.size() != cols)
      throw DataFormatError(path + ":" + std::to_string(lineNo) + ": expected " +
                            std::to_string(cols) + " fields, got " +
                            std::to_string(fields.size()));
    for (const auto& f : fields) values.push_back(parseNumber(f, path, lineNo));
    ++rows;
  }
  table.data.resize(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c) table.data(r, c) = values[r * cols + c];
  return table;
}

void writeCsv(const std::string& path, const std::vector<std::string>& header,
              const MatrixXd& data) {
  if (static_cast<Eigen::Index>(header.size()) != data.cols())
    throw DataFormatError("writeCsv: header length does not match column count");
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot write '" + path + "'");
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  char buf[40];
  for (int r = 0; r < data.rows(); ++r) {
    for (int c = 0; c < data.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", data(r, c));
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw DataFormatError("write failed for '" + path + "'");
}

}  // namespace calib
