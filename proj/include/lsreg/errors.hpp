#pragma once

#include <stdexcept>
#include <string>

namespace lsreg {

/// Failure categories; the CLI maps each to a distinct exit code.
enum class ErrorCategory { InvalidArgument = 2, Config = 3, Solver = 4, Io = 5 };

class Error : public std::runtime_error
{
public:
  Error(ErrorCategory category, const std::string& what)
    : std::runtime_error(what), category_(category)
  {}

  ErrorCategory category() const noexcept { return category_; }

private:
  ErrorCategory category_;
};

struct InvalidArgument : Error
{
  explicit InvalidArgument(const std::string& what)
    : Error(ErrorCategory::InvalidArgument, what)
  {}
};

struct SolverError : Error
{
  explicit SolverError(const std::string& what)
    : Error(ErrorCategory::Solver, what)
  {}
};

struct ConfigError : Error
{
  ConfigError(int line, const std::string& what)
    : Error(ErrorCategory::Config,
            line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line)
  {}

  int line() const noexcept { return line_; }

private:
  int line_;
};

struct IoError : Error
{
  explicit IoError(const std::string& what)
    : Error(ErrorCategory::Io, what)
  {}
};

inline void require(bool condition, const std::string& message)
{
  if (!condition)
    throw InvalidArgument(message);
}

} // namespace lsreg
