#include "clemit/csv.hpp"

#include <cmath>
#include <cstdio>

#include "clemit/types.hpp"

namespace clemit {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", value);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  for (const auto& h : header) cell(std::string_view(h));
  end_row();
}

void CsvWriter::separator() {
  if (row_open_) line_.push_back(',');
  row_open_ = true;
}

CsvWriter& CsvWriter::cell(double value) {
  separator();
  line_ += format_number(value);
  return *this;
}

CsvWriter& CsvWriter::cell(long long value) {
  separator();
  line_ += std::to_string(value);
  return *this;
}

CsvWriter& CsvWriter::cell(std::string_view text) {
  separator();
  line_ += text;
  return *this;
}

void CsvWriter::end_row() {
  line_.push_back('\n');
  out_ << line_;
  line_.clear();
  row_open_ = false;
  if (!out_) throw Error(ErrorCode::IoError, "write to " + path_.string() + " failed");
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw Error(ErrorCode::IoError, "closing " + path_.string() + " failed");
}

}  // namespace clemit
