#pragma once

#include <stdexcept>
#include <string>

namespace monomvn {

/// Process exit codes used by the command-line front end.
enum class ExitCode : int { ok = 0, usage = 2, data = 3, numeric = 4 };

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Bad arguments or configuration.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ExitCode::usage, what) {}
};

/// Malformed or unsuitable input data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::data, what) {}
};

/// Numerical breakdown: non-PD systems, failed root finds, runaway rejection loops.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ExitCode::numeric, what) {}
};

/// A portfolio problem whose constraint set is empty.
class InfeasibleError : public NumericError {
 public:
  explicit InfeasibleError(const std::string& what) : NumericError(what) {}
};

}  // namespace monomvn
