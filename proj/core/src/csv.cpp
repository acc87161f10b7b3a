#include "mmtc/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace mmtc {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> header)
    : out_(out), width_(header.size()) {
  for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (v.find_first_of(",\"\n") != std::string::npos) {
    std::string quoted = "\"";
    for (char c : v) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    quoted += '"';
    out_ << (filled_ ? "," : "") << quoted;
  } else {
    out_ << (filled_ ? "," : "") << v;
  }
  ++filled_;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }
CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }
CsvWriter& CsvWriter::cell(unsigned long long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
  if (filled_ != width_) {
    throw std::logic_error("CSV row has " + std::to_string(filled_) + " cells, header has " +
                           std::to_string(width_));
  }
  out_ << '\n';
  filled_ = 0;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << format_double(m(r, c));
    out << '\n';
  }
}

Matrix read_matrix(std::istream& in) {
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
    throw InvalidArgument("matrix file lacks a valid 'rows cols' header");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::string tok;
      if (!(in >> tok)) throw InvalidArgument("matrix file truncated");
      m(r, c) = std::stod(tok);
    }
  }
  return m;
}

void write_matrix_file(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_matrix(out, m);
}

Matrix read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_matrix(in);
}

}  // namespace mmtc
