#pragma once

#include <stdexcept>
#include <string>

namespace asq {

// Malformed or inconsistent input data (files, configs, integral sets).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Arguments that violate a documented precondition.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// An iterative method ran out of iterations before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double best_value, double residual, int iterations)
        : std::runtime_error(what),
          best_value(best_value),
          residual(residual),
          iterations(iterations) {}

    double best_value;
    double residual;
    int iterations;
};

}  // namespace asq
