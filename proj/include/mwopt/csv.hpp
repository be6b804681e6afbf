#pragma once

#include <string>
#include <vector>

#include "mwopt/types.hpp"

namespace mwopt {

// Serialize a double with 17 significant digits (round-trip exact), so that
// identical runs produce byte-identical files.
std::string format_double(double value);

// Minimal CSV trace writer: one `# schema: <name>` comment line, one header
// row, then data rows.  All floats go through format_double.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& schema,
            const std::vector<std::string>& columns);
  ~CsvWriter();

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void write_row(const std::vector<double>& values);
  void close();
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  void* stream_;  // FILE*, kept opaque in the header
  std::size_t columns_;
};

// Load an arrival sequence: header "b1,...,bm", one row per step.
// Lines starting with '#' are skipped.
std::vector<Vector> load_arrivals_csv(const std::string& path);

}  // namespace mwopt
