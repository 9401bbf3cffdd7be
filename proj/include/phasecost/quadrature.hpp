#pragma once

#include <functional>
#include <vector>

namespace phasecost::quad {

using Integrand = std::function<double(double)>;

struct Options {
    double abs_tol = 1e-14;
    double rel_tol = 1e-12;
    int max_intervals = 4000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    bool converged = true;
};

// Globally adaptive Gauss-Kronrod 7/15 on [a, b].
Result integrate(const Integrand& f, double a, double b, const Options& opt = {});

// Same, after x = a + (b-a) sin^2(pi u / 2). Square-root and inverse square-root
// behaviour at either endpoint becomes smooth in u.
Result integrate_endpoints(const Integrand& f, double a, double b, const Options& opt = {});

// Splits [a, b] at the given interior points (out-of-range points are ignored) and
// applies integrate_endpoints on each piece.
Result integrate_pieces(const Integrand& f, double a, double b, std::vector<double> cuts,
                        const Options& opt = {});

// Integral over [a, inf) summed over geometric shells [a + L 2^(k-1), a + L 2^k].
// Stops once the shell contributions fall below tolerance; throws NumericError if the
// shells stop shrinking (divergent tail).
Result integrate_to_infinity(const Integrand& f, double a, double scale, const Options& opt = {},
                             std::vector<double> cuts = {});

// Integral over (0, b] by dyadic shells toward 0. converged=false and value=+inf when the
// partial sums keep growing.
Result integrate_from_zero(const Integrand& f, double b, const Options& opt = {},
                           std::vector<double> cuts = {});

}  // namespace phasecost::quad
