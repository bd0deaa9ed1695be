#pragma once

#include <stdexcept>
#include <string>

namespace calib {

// Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Maps to CLI exit code 3.
struct DataFormatError : std::runtime_error {
  explicit DataFormatError(const std::string& what) : std::runtime_error(what) {}
};

// Maps to CLI exit code 4.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace calib
