#include "trialkit/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "trialkit/errors.hpp"

namespace trialkit {

namespace {

HermiteRule compute_rule(std::size_t n) {
    // Jacobi matrix of the Hermite recurrence: zero diagonal, off-diagonal
    // sqrt(i/2). Eigenvalues are the nodes; weights come from the first
    // component of each normalized eigenvector.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                   static_cast<Eigen::Index>(n));
    for (std::size_t i = 1; i < n; ++i) {
        const double b = std::sqrt(static_cast<double>(i) / 2.0);
        jacobi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = b;
        jacobi(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(i)) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    if (solver.info() != Eigen::Success) {
        throw NumericalFailure("hermite_rule: eigensolver did not converge");
    }
    HermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double sqrt_pi = std::sqrt(std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) {
        rule.nodes[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
        const double v0 = solver.eigenvectors()(0, static_cast<Eigen::Index>(i));
        rule.weights[i] = sqrt_pi * v0 * v0;
    }
    return rule;
}

}  // namespace

const HermiteRule& hermite_rule(std::size_t n) {
    if (n == 0) throw InvalidInput("hermite_rule: order must be positive");
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<HermiteRule>> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, std::make_unique<HermiteRule>(compute_rule(n))).first;
    }
    return *it->second;
}

double gauss_hermite_expectation(const std::function<double(double)>& g, double mean,
                                 double var, std::size_t n) {
    if (!std::isfinite(mean) || !std::isfinite(var)) {
        throw InvalidInput("gauss_hermite_expectation: non-finite moments");
    }
    if (var < 0.0) throw InvalidInput("gauss_hermite_expectation: negative variance");
    if (var == 0.0) return g(mean);
    const HermiteRule& rule = hermite_rule(n);
    const double scale = std::sqrt(2.0 * var);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += rule.weights[i] * g(mean + scale * rule.nodes[i]);
    }
    return acc / std::sqrt(std::numbers::pi);
}

}  // namespace trialkit
