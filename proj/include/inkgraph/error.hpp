#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace inkgraph {

enum class ErrorKind {
  argument,
  parse,
  validation,
  embedding,
  scorer_contract,
  state,
  budget,
  rendering,
  data,
  io,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The message is
/// prefixed with the module that raised it, e.g. "grammar: validation error: ...".
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string_view module, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

private:
  ErrorKind kind_;
  std::string module_;
};

/// Raised when a search exceeds its configured work cap.
class BudgetError : public Error {
public:
  BudgetError(std::string_view module, const std::string& what, std::size_t partial_count);

  std::size_t partial_count() const noexcept { return partial_count_; }

private:
  std::size_t partial_count_;
};

}  // namespace inkgraph
