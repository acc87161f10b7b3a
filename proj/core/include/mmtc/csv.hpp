#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mmtc/common.hpp"

namespace mmtc {

/// Comma-separated rows with a fixed header; numbers at round-trip precision.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);

  CsvWriter& cell(const std::string& v);
  CsvWriter& cell(const char* v) { return cell(std::string(v)); }
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(unsigned long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(std::size_t v) { return cell(static_cast<unsigned long long>(v)); }
  /// Ends the current row; throws if its width differs from the header.
  void end_row();

 private:
  std::ostream& out_;
  std::size_t width_;
  std::size_t filled_ = 0;
};

/// "rows cols" line followed by one whitespace-separated line per row.
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);
void write_matrix_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_file(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace mmtc
