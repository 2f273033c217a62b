#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace clemit {

/// "%.12e", with "nan" for every NaN so output never depends on its sign bit.
std::string format_number(double value);

/// Minimal UTF-8 CSV writer: header row, comma separated, '\n' line ends.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& cell(double value);
  CsvWriter& cell(long long value);
  CsvWriter& cell(std::string_view text);
  void end_row();

  void close();

 private:
  void separator();

  std::filesystem::path path_;
  std::ofstream out_;
  std::string line_;
  bool row_open_ = false;
};

}  // namespace clemit
