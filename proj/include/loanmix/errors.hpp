#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace loanmix {

/// Invalid scenario data or violated operation preconditions.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Consumption left the utility function's domain.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// The income-contingent pool has no participants, so its mean is undefined.
struct DegeneratePoolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A maintained model assumption fails for the requested computation.
struct AssumptionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Contradiction that indicates a bug rather than bad input.
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Fixed-point iteration ran out of iterations; carries the iterate history.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}

    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

namespace detail {

/// Shortest round-trip decimal form, for error messages and CSV cells.
inline std::string num(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

}  // namespace loanmix
