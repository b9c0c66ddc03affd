#pragma once

#include <stdexcept>
#include <string>

namespace triage {

// Error taxonomy mirrors the CLI exit codes: ConfigError -> 1, DataError -> 2,
// anything else escaping to main -> 3.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class DataError : public Error {
public:
  using Error::Error;
};

class NotFoundError : public DataError {
public:
  using DataError::DataError;
};

} // namespace triage
