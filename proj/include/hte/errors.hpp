#pragma once

#include <stdexcept>
#include <string>

namespace hte {

// Malformed input: bad CSV, schema mismatch, invalid configuration.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// A statistic is undefined on the given data (empty cells, nonpositive
// variances, degenerate grids).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hte
