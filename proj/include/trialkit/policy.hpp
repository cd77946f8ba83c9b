#pragma once

#include <cstdint>
#include <string>

#include "trialkit/model.hpp"

namespace trialkit {

/// Generalized logistic link used for smooth posterior sampling. l_min/l_max
/// double as the probability clip range.
struct LogisticParams {
    double l_min = 0.2;
    double l_max = 0.8;
    double steepness_b = 1.0;
    double offset_c = 1.0;
    double shape_k = 1.0;

    /// Throws InvalidInput unless 0 < l_min <= 0.5 <= l_max < 1 and the shape
    /// parameters are positive. The 0.5 containment keeps the fixed schedule
    /// tail inside the clip range.
    void validate() const;
};

/// Which state fed a schedule entry: a freshly built state, the imputed
/// schedule state, or the fixed-0.5 tail.
enum class StateKind { actual, modified, fixed };

const char* to_string(StateKind kind);
StateKind state_kind_from_string(const std::string& s);

struct DecisionOutcome {
    double pi = 0.5;
    int action = 0;
    std::uint64_t rng_seed = 0;
    std::string policy_version;
    StateVector state_used;
    StateKind state_kind = StateKind::fixed;
};

/// rho(x) = l_min + (l_max - l_min) / (1 + c exp(-b x))^k, evaluated so that
/// extreme x returns the asymptote instead of overflowing.
double rho(double x, const LogisticParams& params);

/// pi = E[rho(f(s)' beta)], beta ~ N(mu, sigma), via Gauss-Hermite quadrature
/// on the univariate law of f(s)' beta. The result is clamped to
/// [l_min, l_max]. A variance below -1e-10 is treated as corruption and
/// throws NumericalFailure; tiny negative roundoff clamps to zero.
double action_selection_prob(const StateVector& state, const BetaMarginal& beta,
                             const LogisticParams& params, int quad_nodes);

/// Seeded Monte Carlo estimate of the same expectation, drawing the full
/// 5-dimensional beta. Independent of the quadrature path; used as an oracle.
double mc_action_selection_prob(const StateVector& state, const BetaMarginal& beta,
                                const LogisticParams& params, std::size_t n_draws,
                                std::uint64_t seed);

/// Bernoulli(pi) draw, deterministic in the seed. pi == 0 never prompts and
/// pi == 1 always does. Throws InvalidInput when pi is outside [0,1].
int sample_action(double pi, std::uint64_t seed);

}  // namespace trialkit
