#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace trialkit {

/// Nodes and weights for Gauss-Hermite integration against exp(-x^2).
struct HermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Rule of the given order via Golub-Welsch. Results are cached per order;
/// thread safe. Throws InvalidInput for n == 0 and NumericalFailure if the
/// eigensolve does not converge.
const HermiteRule& hermite_rule(std::size_t n);

/// E[g(X)] for X ~ N(mean, var) by substitution x = mean + sqrt(2 var) t.
/// var must be >= 0 and finite; g is evaluated at exactly n points.
double gauss_hermite_expectation(const std::function<double(double)>& g, double mean,
                                 double var, std::size_t n);

}  // namespace trialkit
