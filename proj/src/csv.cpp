#include "mwopt/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mwopt {

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& schema,
                     const std::vector<std::string>& columns)
    : path_(path), stream_(nullptr), columns_(columns.size()) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) {
    throw std::runtime_error("cannot open CSV output file: " + path);
  }
  stream_ = f;
  std::fprintf(f, "# schema: %s\n", schema.c_str());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    std::fprintf(f, "%s%s", i == 0 ? "" : ",", columns[i].c_str());
  }
  std::fprintf(f, "\n");
}

CsvWriter::~CsvWriter() { close(); }

void CsvWriter::write_row(const std::vector<double>& values) {
  if (values.size() != columns_) {
    throw std::runtime_error("CSV row width does not match header");
  }
  FILE* f = static_cast<FILE*>(stream_);
  if (f == nullptr) throw std::runtime_error("CSV writer already closed");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::string text = format_double(values[i]);
    std::fprintf(f, "%s%s", i == 0 ? "" : ",", text.c_str());
  }
  std::fprintf(f, "\n");
}

void CsvWriter::close() {
  if (stream_ != nullptr) {
    std::fclose(static_cast<FILE*>(stream_));
    stream_ = nullptr;
  }
}

std::vector<Vector> load_arrivals_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open arrivals CSV: " + path);

  std::string line;
  int m = -1;
  std::vector<Vector> rows;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header_seen) {
      // Expect b1,...,bm with consecutive indices starting at 1.
      m = static_cast<int>(cells.size());
      for (int j = 0; j < m; ++j) {
        const std::string expected = "b" + std::to_string(j + 1);
        if (cells[static_cast<std::size_t>(j)] != expected) {
          throw ValidationError("arrivals CSV header must be b1,...,bm; got '" +
                                cells[static_cast<std::size_t>(j)] +
                                "' in column " + std::to_string(j + 1));
        }
      }
      header_seen = true;
      continue;
    }
    if (static_cast<int>(cells.size()) != m) {
      throw ValidationError("arrivals CSV row " + std::to_string(line_no) +
                            " has " + std::to_string(cells.size()) +
                            " columns, expected " + std::to_string(m));
    }
    Vector row(m);
    for (int j = 0; j < m; ++j) {
      try {
        row[j] = std::stod(cells[static_cast<std::size_t>(j)]);
      } catch (const std::exception&) {
        throw ValidationError("arrivals CSV row " + std::to_string(line_no) +
                              ": cannot parse '" +
                              cells[static_cast<std::size_t>(j)] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw ValidationError("arrivals CSV has no header row");
  return rows;
}

}  // namespace mwopt
