#include "trialkit/model.hpp"

#include <cmath>

#include "trialkit/errors.hpp"

namespace trialkit {

Vec5 StateVector::to_vector() const {
    Vec5 f;
    f << bias, time_of_day, b_bar, a_bar, app_engagement;
    return f;
}

void StateVector::validate() const {
    const Vec5 f = to_vector();
    for (int i = 0; i < kStateDim; ++i) {
        if (!std::isfinite(f(i))) throw InvalidInput("state entry " + std::to_string(i) + " not finite");
    }
    if (bias != 1.0) throw InvalidInput("state bias must be 1");
    if (time_of_day != 0.0 && time_of_day != 1.0) throw InvalidInput("time_of_day must be 0 or 1");
    if (app_engagement != 0.0 && app_engagement != 1.0) {
        throw InvalidInput("app_engagement must be 0 or 1");
    }
    if (a_bar < 0.0 || a_bar > 1.0) throw InvalidInput("a_bar outside [0,1]");
}

PriorSpec PriorSpec::scaled_identity(double scale, double noise_var) {
    PriorSpec p;
    p.sigma_alpha0 = Mat5::Identity() * scale;
    p.sigma_alpha1 = Mat5::Identity() * scale;
    p.sigma_beta = Mat5::Identity() * scale;
    p.noise_var = noise_var;
    return p;
}

Vec15 PriorSpec::stacked_mean() const {
    Vec15 mu;
    mu << mu_alpha0, mu_alpha1, mu_beta;
    return mu;
}

Mat15 PriorSpec::stacked_cov() const {
    Mat15 sigma = Mat15::Zero();
    sigma.block<5, 5>(0, 0) = sigma_alpha0;
    sigma.block<5, 5>(5, 5) = sigma_alpha1;
    sigma.block<5, 5>(10, 10) = sigma_beta;
    return sigma;
}

namespace {

void require_spd(const Mat5& m, const char* name) {
    if (!m.isApprox(m.transpose(), 1e-12)) {
        throw InvalidInput(std::string(name) + " not symmetric");
    }
    Eigen::LLT<Mat5> llt(m);
    if (llt.info() != Eigen::Success) {
        throw InvalidInput(std::string(name) + " not positive definite");
    }
}

}  // namespace

void PriorSpec::validate() const {
    if (!(noise_var > 0.0) || !std::isfinite(noise_var)) {
        throw InvalidInput("noise_var must be positive and finite");
    }
    require_spd(sigma_alpha0, "sigma_alpha0");
    require_spd(sigma_alpha1, "sigma_alpha1");
    require_spd(sigma_beta, "sigma_beta");
    if (!stacked_mean().allFinite()) throw InvalidInput("prior mean not finite");
}

Vec15 build_design_row(const StateVector& state, double pi, int action) {
    state.validate();
    if (!(pi >= 0.0 && pi <= 1.0)) throw InvalidInput("pi outside [0,1]");
    if (action != 0 && action != 1) throw InvalidInput("action must be 0 or 1");
    const Vec5 f = state.to_vector();
    Vec15 row;
    row.segment<5>(0) = f;
    row.segment<5>(5) = pi * f;
    row.segment<5>(10) = (static_cast<double>(action) - pi) * f;
    return row;
}

PosteriorState posterior_update_from_moments(const Vec15& mu_prior, const Mat15& sigma_prior,
                                             double noise_var,
                                             const std::vector<TrainingTuple>& batch,
                                             std::uint64_t prev_update_index) {
    if (!(noise_var > 0.0) || !std::isfinite(noise_var)) {
        throw InvalidInput("noise_var must be positive and finite");
    }
    PosteriorState out;
    out.update_index = prev_update_index + 1;
    out.trained_on = batch.size();
    out.version_id = "v" + std::to_string(out.update_index);

    if (batch.empty()) {
        // No data: the posterior is the prior, returned without an inversion
        // round trip so the moments are bit-identical.
        out.mu = mu_prior;
        out.sigma = sigma_prior;
        return out;
    }

    Eigen::LLT<Mat15> prior_llt(sigma_prior);
    if (prior_llt.info() != Eigen::Success) {
        throw NumericalFailure("prior covariance not positive definite");
    }
    const Mat15 prior_precision = prior_llt.solve(Mat15::Identity());

    Mat15 gram = Mat15::Zero();
    Vec15 xty = Vec15::Zero();
    for (const TrainingTuple& tuple : batch) {
        if (!tuple.complete) throw InvalidInput("incomplete tuple passed to posterior update");
        if (!std::isfinite(tuple.reward)) throw InvalidInput("non-finite reward");
        const Vec15 row = build_design_row(tuple.state, tuple.pi, tuple.action);
        gram.noalias() += row * row.transpose();
        xty.noalias() += row * tuple.reward;
    }

    const Mat15 precision = prior_precision + gram / noise_var;
    Eigen::LLT<Mat15> post_llt(precision);
    if (post_llt.info() != Eigen::Success) {
        throw NumericalFailure("posterior precision not positive definite");
    }
    Mat15 sigma_post = post_llt.solve(Mat15::Identity());
    sigma_post = ((sigma_post + sigma_post.transpose()) / 2.0).eval();
    out.sigma = sigma_post;
    out.mu = post_llt.solve(prior_precision * mu_prior + xty / noise_var);
    if (!out.mu.allFinite() || !out.sigma.allFinite()) {
        throw NumericalFailure("posterior moments not finite");
    }
    return out;
}

PosteriorState posterior_update(const PriorSpec& prior, const std::vector<TrainingTuple>& batch,
                                std::uint64_t prev_update_index) {
    prior.validate();
    return posterior_update_from_moments(prior.stacked_mean(), prior.stacked_cov(),
                                         prior.noise_var, batch, prev_update_index);
}

double predict_reward_mean(const PosteriorState& posterior, const StateVector& state, double pi,
                           int action) {
    return build_design_row(state, pi, action).dot(posterior.mu);
}

BetaMarginal marginal_advantage_posterior(const PosteriorState& posterior) {
    BetaMarginal m;
    m.mu = posterior.mu.segment<5>(10);
    m.sigma = posterior.sigma.block<5, 5>(10, 10);
    return m;
}

}  // namespace trialkit
