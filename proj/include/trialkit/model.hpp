#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace trialkit {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat15 = Eigen::Matrix<double, 15, 15>;

inline constexpr int kStateDim = 5;
inline constexpr int kJointDim = 15;

/// The five per-decision features. Order is fixed everywhere:
/// [bias, time_of_day, b_bar, a_bar, app_engagement].
struct StateVector {
    double bias = 1.0;
    double time_of_day = 0.0;     // 0 = morning, 1 = evening
    double b_bar = 0.0;           // normalized exponential average of brushing quality
    double a_bar = 0.0;           // exponential average of prompts sent, in [0,1]
    double app_engagement = 0.0;  // prior-day app opened, 0 or 1

    Vec5 to_vector() const;
    /// Throws InvalidInput on any violated field constraint.
    void validate() const;
};

/// Independent Gaussian priors for the three parameter blocks plus the fixed
/// observation noise variance.
struct PriorSpec {
    Vec5 mu_alpha0 = Vec5::Zero();
    Mat5 sigma_alpha0 = Mat5::Identity();
    Vec5 mu_alpha1 = Vec5::Zero();
    Mat5 sigma_alpha1 = Mat5::Identity();
    Vec5 mu_beta = Vec5::Zero();
    Mat5 sigma_beta = Mat5::Identity();
    double noise_var = 1.0;

    /// Zero means, identity blocks scaled by `scale`.
    static PriorSpec scaled_identity(double scale, double noise_var);

    Vec15 stacked_mean() const;
    Mat15 stacked_cov() const;  // block diagonal over (alpha0, alpha1, beta)
    /// Throws InvalidInput when a block is not symmetric positive definite or
    /// noise_var is not positive.
    void validate() const;
};

/// Versioned joint posterior over (alpha0, alpha1, beta).
struct PosteriorState {
    Vec15 mu = Vec15::Zero();
    Mat15 sigma = Mat15::Identity();
    std::uint64_t update_index = 0;
    std::size_t trained_on = 0;
    std::string version_id;
};

struct TrainingTuple {
    std::string participant_id;
    int decision_index = 0;  // participant-local t
    StateVector state;
    double pi = 0.0;
    int action = 0;
    double reward = 0.0;
    bool complete = true;
};

/// Marginal law of the advantage block, the only part action selection needs.
struct BetaMarginal {
    Vec5 mu = Vec5::Zero();
    Mat5 sigma = Mat5::Identity();
};

/// Row [f(s), pi * f(s), (a - pi) * f(s)]. Throws InvalidInput on a non-finite
/// state entry, pi outside [0,1], or action outside {0,1}.
Vec15 build_design_row(const StateVector& state, double pi, int action);

/// Conjugate update for the known-noise linear model, refit from explicit
/// prior moments. Throws NumericalFailure when a factorization fails and
/// InvalidInput if the batch contains an incomplete tuple.
PosteriorState posterior_update_from_moments(const Vec15& mu_prior, const Mat15& sigma_prior,
                                             double noise_var,
                                             const std::vector<TrainingTuple>& batch,
                                             std::uint64_t prev_update_index);

/// Same update starting from a PriorSpec (block-diagonal stacked prior).
PosteriorState posterior_update(const PriorSpec& prior, const std::vector<TrainingTuple>& batch,
                                std::uint64_t prev_update_index = 0);

/// Posterior-mean reward prediction: design row dotted with mu.
double predict_reward_mean(const PosteriorState& posterior, const StateVector& state, double pi,
                           int action);

/// Beta block of the joint posterior: coordinates 10..14.
BetaMarginal marginal_advantage_posterior(const PosteriorState& posterior);

}  // namespace trialkit
