#pragma once

#include <stdexcept>
#include <string>

namespace seisclass {

/// Process exit codes used by the command-line driver.
enum class ExitCode : int {
  ok = 0,
  config = 2,
  data = 3,
  numeric = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid parameters, malformed configuration, unsupported designs.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::config, what) {}
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::data, what) {}
};

/// Singular systems, failed tolerances, non-finite results.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ExitCode::numeric, what) {}
};

}  // namespace seisclass
