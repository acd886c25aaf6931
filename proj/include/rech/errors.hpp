#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rech {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range input (bad prices, bad split, bad parameters).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Input that is well formed but carries no information (all-zero weights, constant series).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// A variance recursion left the admissible range at observation `t` (1-based).
class NumericalFailure : public Error {
public:
    NumericalFailure(std::size_t t, const std::string& what)
        : Error(what + " at t=" + std::to_string(t)), t_(t) {}

    [[nodiscard]] std::size_t t() const noexcept { return t_; }

private:
    std::size_t t_;
};

/// Likelihood annealing hit its stage cap before reaching temperature 1.
class IncompleteAnneal : public Error {
public:
    IncompleteAnneal(double temperature, std::size_t stages)
        : Error("annealing stopped at temperature " + std::to_string(temperature) + " after " +
                std::to_string(stages) + " stages"),
          temperature_(temperature),
          stages_(stages) {}

    [[nodiscard]] double temperature() const noexcept { return temperature_; }
    [[nodiscard]] std::size_t stages() const noexcept { return stages_; }

private:
    double temperature_;
    std::size_t stages_;
};

class OptimizationFailure : public Error {
public:
    using Error::Error;
};

}  // namespace rech
