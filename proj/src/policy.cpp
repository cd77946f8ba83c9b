#include "trialkit/policy.hpp"

#include <algorithm>
#include <cmath>

#include "trialkit/errors.hpp"
#include "trialkit/quadrature.hpp"
#include "trialkit/rng.hpp"

namespace trialkit {

void LogisticParams::validate() const {
    const bool finite = std::isfinite(l_min) && std::isfinite(l_max) && std::isfinite(steepness_b) &&
                        std::isfinite(offset_c) && std::isfinite(shape_k);
    if (!finite) throw InvalidInput("logistic params must be finite");
    if (!(0.0 < l_min && l_min < l_max && l_max < 1.0)) {
        throw InvalidInput("need 0 < l_min < l_max < 1");
    }
    if (!(l_min <= 0.5 && 0.5 <= l_max)) {
        throw InvalidInput("clip range [l_min, l_max] must contain 0.5");
    }
    if (!(steepness_b > 0.0)) throw InvalidInput("steepness_b must be positive");
    if (!(offset_c > 0.0)) throw InvalidInput("offset_c must be positive");
    if (!(shape_k > 0.0)) throw InvalidInput("shape_k must be positive");
}

const char* to_string(StateKind kind) {
    switch (kind) {
        case StateKind::actual: return "actual";
        case StateKind::modified: return "modified";
        case StateKind::fixed: return "fixed";
    }
    throw InvalidInput("unknown state kind");
}

StateKind state_kind_from_string(const std::string& s) {
    if (s == "actual") return StateKind::actual;
    if (s == "modified") return StateKind::modified;
    if (s == "fixed") return StateKind::fixed;
    throw InvalidInput("unknown state kind: " + s);
}

double rho(double x, const LogisticParams& params) {
    // Work with log(1 + c exp(t)), t = -b x. When c exp(t) would overflow the
    // log is log(c) + t to double precision, so switch representations there.
    const double t = -params.steepness_b * x;
    const double log_c = std::log(params.offset_c);
    double log_denom;  // log(1 + c exp(t))
    if (log_c + t > 40.0) {
        log_denom = log_c + t;
    } else {
        log_denom = std::log1p(params.offset_c * std::exp(t));
    }
    return params.l_min + (params.l_max - params.l_min) * std::exp(-params.shape_k * log_denom);
}

double action_selection_prob(const StateVector& state, const BetaMarginal& beta,
                             const LogisticParams& params, int quad_nodes) {
    params.validate();
    state.validate();
    if (quad_nodes < 1) throw InvalidInput("quad_nodes must be >= 1");
    const Vec5 f = state.to_vector();
    const double m = f.dot(beta.mu);
    double v = f.dot(beta.sigma * f);
    if (!std::isfinite(m) || !std::isfinite(v)) {
        throw NumericalFailure("advantage moments not finite");
    }
    if (v < 0.0) {
        if (v < -1e-10) throw NumericalFailure("advantage variance negative beyond roundoff");
        v = 0.0;
    }
    const double value = gauss_hermite_expectation(
        [&](double x) { return rho(x, params); }, m, v, static_cast<std::size_t>(quad_nodes));
    return std::clamp(value, params.l_min, params.l_max);
}

double mc_action_selection_prob(const StateVector& state, const BetaMarginal& beta,
                                const LogisticParams& params, std::size_t n_draws,
                                std::uint64_t seed) {
    params.validate();
    state.validate();
    if (n_draws < 1) throw InvalidInput("n_draws must be >= 1");
    // PSD-robust square root: eigendecompose and clamp tiny negative
    // eigenvalues so boundary covariances (e.g. rank-deficient) still sample.
    Eigen::SelfAdjointEigenSolver<Mat5> es(beta.sigma);
    if (es.info() != Eigen::Success) throw NumericalFailure("covariance eigensolve failed");
    Vec5 scale;
    for (int i = 0; i < kStateDim; ++i) {
        const double ev = es.eigenvalues()(i);
        if (ev < -1e-10) throw NumericalFailure("covariance not PSD");
        scale(i) = std::sqrt(std::max(ev, 0.0));
    }
    const Mat5 root = es.eigenvectors() * scale.asDiagonal();
    const Vec5 f = state.to_vector();
    Rng rng(seed);
    double acc = 0.0;
    Vec5 z;
    for (std::size_t d = 0; d < n_draws; ++d) {
        for (int i = 0; i < kStateDim; ++i) z(i) = rng.normal();
        const Vec5 draw = beta.mu + root * z;
        acc += rho(f.dot(draw), params);
    }
    return acc / static_cast<double>(n_draws);
}

int sample_action(double pi, std::uint64_t seed) {
    if (!(pi >= 0.0 && pi <= 1.0)) throw InvalidInput("pi outside [0,1]");
    return unit_double(detail::mix64(seed)) < pi ? 1 : 0;
}

}  // namespace trialkit
