#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sonopose {

/// Parse failure with file/line context, message reads "<path>:<line>: why".
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest decimal string that round-trips the double exactly.
std::string format_double(double v);

/// strtod on the whole field; throws std::invalid_argument on trailing junk.
double parse_double(const std::string& field);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::ofstream out_;
  std::size_t width_;
  std::filesystem::path path_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads whole file; enforces uniform column count. `expect_header` (if
/// non-empty) must match the first line exactly.
CsvTable read_csv(const std::filesystem::path& path,
                  const std::vector<std::string>& expect_header = {});

}  // namespace sonopose
