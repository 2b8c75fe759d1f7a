#include "inkgraph/error.hpp"

namespace inkgraph {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::argument: return "argument error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::embedding: return "embedding error";
    case ErrorKind::scorer_contract: return "scorer contract error";
    case ErrorKind::state: return "state error";
    case ErrorKind::budget: return "budget exceeded";
    case ErrorKind::rendering: return "rendering error";
    case ErrorKind::data: return "data error";
    case ErrorKind::io: return "io error";
  }
  return "error";
}

namespace {
std::string compose(ErrorKind kind, std::string_view module, const std::string& what) {
  std::string out(module);
  out += ": ";
  out += to_string(kind);
  out += ": ";
  out += what;
  return out;
}
}  // namespace

Error::Error(ErrorKind kind, std::string_view module, const std::string& what)
    : std::runtime_error(compose(kind, module, what)), kind_(kind), module_(module) {}

BudgetError::BudgetError(std::string_view module, const std::string& what, std::size_t partial_count)
    : Error(ErrorKind::budget, module, what + " (after " + std::to_string(partial_count) + ")"),
      partial_count_(partial_count) {}

}  // namespace inkgraph
