#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace droploss::csv {

// Round-trip-exact decimal rendering; '.' separator regardless of locale.
std::string format(double v);

// Comma-separated writer with LF line endings and mandatory header row
// discipline left to the caller. Opens in binary mode so output bytes are
// platform-independent.
class Writer {
 public:
  explicit Writer(const std::string& path);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
};

std::vector<std::vector<std::string>> read(const std::string& path);

}  // namespace droploss::csv
