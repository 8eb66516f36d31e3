#include "sonopose/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace sonopose {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  // Shortest precision that parses back to the same bits.
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& field) {
  if (field == "nan") return std::nan("");
  if (field == "inf") return INFINITY;
  if (field == "-inf") return -INFINITY;
  const char* s = field.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw std::invalid_argument("not a number: '" + field + "'");
  return v;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& header)
    : out_(path), width_(header.size()), path_(path) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_)
    throw std::logic_error("row width " + std::to_string(cells.size()) +
                           " != header width " + std::to_string(width_));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw std::runtime_error("write failed: " + path_.string());
}

namespace {
std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}
}  // namespace

CsvTable read_csv(const std::filesystem::path& path,
                  const std::vector<std::string>& expect_header) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ":0: cannot open");
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    auto cells = split_line(line);
    if (lineno == 1) {
      table.header = cells;
      if (!expect_header.empty() && cells != expect_header)
        throw ParseError(path.string() + ":1: unexpected header");
      continue;
    }
    if (cells.size() != table.header.size())
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected " + std::to_string(table.header.size()) +
                       " columns, got " + std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty())
    throw ParseError(path.string() + ":0: empty file");
  return table;
}

}  // namespace sonopose
