#include "isect/format.hpp"

#include "isect/common.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

namespace isect {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::InvalidArgument, "cannot write " + tmp);
    out << content;
    out.flush();
    require(static_cast<bool>(out), ErrorKind::InvalidArgument, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::InvalidArgument, "cannot rename onto " + path);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::InvalidArgument, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(header); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  require(cells.size() == width_, ErrorKind::InvalidArgument, "CSV row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ += ',';
    out_ += cells[i];
  }
  out_ += '\n';
}

std::string matrix_to_csv(const Matrix& X) {
  std::string out;
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) {
      if (j) out += ',';
      out += format_double(X(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix matrix_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> vals;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      double v = 0.0;
      const std::size_t start = cell.find_first_not_of(' ');
      require(start != std::string::npos, ErrorKind::MalformedFile, "matrix csv: empty cell");
      const char* b = cell.data() + start;
      const char* e = cell.data() + cell.size();
      while (e > b && (e[-1] == ' ' || e[-1] == '\r')) --e;
      const auto res = std::from_chars(b, e, v);
      require(res.ec == std::errc() && res.ptr == e, ErrorKind::MalformedFile,
              "matrix csv: bad number '" + cell + "'");
      vals.push_back(v);
    }
    require(rows.empty() || vals.size() == rows.front().size(), ErrorKind::MalformedFile,
            "matrix csv: ragged rows");
    rows.push_back(std::move(vals));
  }
  require(!rows.empty(), ErrorKind::MalformedFile, "matrix csv: empty");
  Matrix X(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) X(i, j) = rows[i][j];
  }
  return X;
}

}  // namespace isect
