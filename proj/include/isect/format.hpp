#pragma once

#include "isect/common.hpp"

#include <string>
#include <vector>

namespace isect {

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Writes `content` to `path` through a sibling temporary and a rename.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// Minimal CSV assembly with a fixed header.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  const std::string& str() const { return out_; }

 private:
  std::size_t width_;
  std::string out_;
};

/// One matrix row per line, comma separated.
std::string matrix_to_csv(const Matrix& X);
Matrix matrix_from_csv(const std::string& text);

}  // namespace isect
