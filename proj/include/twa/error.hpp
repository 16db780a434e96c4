#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. Carries the source name and a 1-based position.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column,
             const std::string& message)
      : Error(source + ":" + std::to_string(line) + ":" +
              std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A node address that does not exist in the tree at hand.
class AddressError : public Error {
 public:
  using Error::Error;
};

/// Precondition violated by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Pattern ranks or arities that do not fit together.
class RankError : public Error {
 public:
  using Error::Error;
};

/// A configured node or search budget ran out.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace twa
