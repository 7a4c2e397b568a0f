#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qmwalk {

// Exit codes used by the CLI: 2 = bad configuration, 3 = capacity
// exhausted, 4 = an acceptance-style check failed.
enum class ErrorCode : int {
  config = 2,
  capacity = 3,
  check = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }
  int exit_code() const { return static_cast<int>(code_); }

 private:
  ErrorCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::config, what) {}
};

// Two objects built over different alphabets were combined.
class AlphabetMismatchError : public ConfigError {
 public:
  explicit AlphabetMismatchError(const std::string& what) : ConfigError(what) {}
};

// A computation would exceed a configured cardinality or overflow cap.
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error(ErrorCode::capacity, what) {}
};

// An operation was asked for in a mode it does not support.
class ModeError : public ConfigError {
 public:
  explicit ModeError(const std::string& what) : ConfigError(what) {}
};

// A tabulated evaluation set is missing elements some product needs.
class CoverageError : public ConfigError {
 public:
  CoverageError(const std::string& what, std::vector<std::string> missing)
      : ConfigError(what), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

}  // namespace qmwalk
