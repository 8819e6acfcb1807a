#include "ftfer/error.hpp"

#include <sstream>

namespace ftfer {

namespace {

std::string parse_message(const std::string& source, std::size_t line, const std::string& what) {
  std::ostringstream os;
  os << source;
  if (line > 0) os << ":" << line;
  os << ": " << what;
  return os.str();
}

std::string solver_message(double residual, std::size_t iterations) {
  std::ostringstream os;
  os << "conjugate gradient did not converge after " << iterations
     << " iterations (relative residual " << residual << ")";
  return os.str();
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : Error(parse_message(source, line, what)), line_(line) {}

SolverError::SolverError(double residual, std::size_t iterations)
    : Error(solver_message(residual, iterations)), residual_(residual), iterations_(iterations) {}

}  // namespace ftfer
