#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace phasecost {

// +inf is an honest value here (conjugates below the asymptotic slope, g below b, ...).
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct UnsupportedForm : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InconsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when w sits in the initial linear region of tau, where no profile attains the infimum.
struct NoMinimizer : std::runtime_error {
    NoMinimizer(double w_, double slope_, const std::string& what)
        : std::runtime_error(what), w(w_), slope_at_zero(slope_) {}
    double w;
    double slope_at_zero;
};

inline bool is_inf(double x) { return x == kInf; }

}  // namespace phasecost
