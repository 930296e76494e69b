// Tiny CSV writer for training curves and metric tables. Numbers are
// printed with enough digits to round-trip doubles.
#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "wavefield/common.hpp"

namespace wavefield::io {

using CsvCell = std::variant<std::string, double, long long>;

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot open CSV for writing: " + path);
  }

  void row(const std::vector<CsvCell>& cells) {
    std::ostringstream line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line << ',';
      if (const auto* s = std::get_if<std::string>(&cells[i]))
        line << *s;
      else if (const auto* d = std::get_if<double>(&cells[i])) {
        std::ostringstream num;
        num.precision(17);
        num << *d;
        line << num.str();
      } else
        line << std::get<long long>(cells[i]);
    }
    out_ << line.str() << "\n";
  }

 private:
  std::ofstream out_;
};

}  // namespace wavefield::io
