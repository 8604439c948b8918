#ifndef BATTOPT_ERRORS_HPP
#define BATTOPT_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace battopt {

/// Invalid or out-of-range user input (grid sizes, layouts, config keys).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Linear solve failed to converge or the system is singular.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual = -1.0)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A function was called with inputs violating its documented precondition.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A power profile asks for more than the cell can deliver.
class InfeasibleProfileError : public std::runtime_error {
public:
    InfeasibleProfileError(const std::string& what, double time)
        : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Non-fatal warnings collected while running a stage. Never printed by the
/// library itself; callers decide where they go.
using Diagnostics = std::vector<std::string>;

inline void warn(Diagnostics* sink, std::string message) {
    if (sink) sink->push_back(std::move(message));
}

} // namespace battopt

#endif // BATTOPT_ERRORS_HPP
