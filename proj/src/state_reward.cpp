#include "trialkit/state_reward.hpp"

#include <algorithm>
#include <cmath>

#include "trialkit/errors.hpp"

namespace trialkit {

void CostParams::validate() const {
    const bool finite = std::isfinite(xi1) && std::isfinite(xi2) && std::isfinite(brush_threshold_b) &&
                        std::isfinite(dosage_threshold_a1) && std::isfinite(dosage_threshold_a2);
    if (!finite) throw InvalidInput("cost params must be finite");
    if (xi1 < 0.0 || xi2 < 0.0) throw InvalidInput("cost weights must be >= 0");
    if (dosage_threshold_a1 < 0.0 || dosage_threshold_a1 > 1.0 || dosage_threshold_a2 < 0.0 ||
        dosage_threshold_a2 > 1.0) {
        throw InvalidInput("dosage thresholds must lie in [0,1]");
    }
}

ExpAverage exponential_average(const std::vector<double>& history, int window) {
    if (window < 1) throw InvalidInput("window must be >= 1");
    if (history.empty()) return {0.0, true};
    const int w = std::min<int>(window, static_cast<int>(history.size()));
    // Weight gamma^(j-1) for the j-th newest entry, normalized by the
    // geometric partial sum so the weights add to 1.
    const double norm = (1.0 - kExpDecay) / (1.0 - std::pow(kExpDecay, w));
    double acc = 0.0;
    double weight = norm;
    for (int j = 1; j <= w; ++j) {
        const double x = history[history.size() - static_cast<std::size_t>(j)];
        if (!std::isfinite(x)) throw InvalidInput("history entry not finite");
        acc += weight * x;
        weight *= kExpDecay;
    }
    return {acc, false};
}

ExpAverage exponential_average_sparse(const std::vector<std::optional<double>>& history,
                                      int window) {
    if (window < 1) throw InvalidInput("window must be >= 1");
    const int w = std::min<int>(window, static_cast<int>(history.size()));
    double acc = 0.0;
    double weight_sum = 0.0;
    double weight = 1.0;
    for (int j = 1; j <= w; ++j) {
        const auto& entry = history[history.size() - static_cast<std::size_t>(j)];
        if (entry.has_value()) {
            if (!std::isfinite(*entry)) throw InvalidInput("history entry not finite");
            acc += weight * *entry;
            weight_sum += weight;
        }
        weight *= kExpDecay;
    }
    if (weight_sum == 0.0) return {0.0, true};
    return {acc / weight_sum, false};
}

double truncate_quality(double seconds) {
    if (!std::isfinite(seconds)) throw InvalidInput("brushing seconds not finite");
    return std::clamp(seconds, 0.0, kMaxBrushSeconds);
}

StateVector build_state(const SensorWindow& window, int time_of_day) {
    if (time_of_day != 0 && time_of_day != 1) throw InvalidInput("time_of_day must be 0 or 1");
    if (!window.app_opened_prior_day.has_value()) {
        throw DataUnavailable("prior-day app engagement missing");
    }
    const int app = *window.app_opened_prior_day;
    if (app != 0 && app != 1) throw InvalidInput("app engagement must be 0 or 1");

    std::vector<std::optional<double>> capped;
    capped.reserve(window.brushing_quality_history.size());
    for (const auto& entry : window.brushing_quality_history) {
        if (entry.has_value()) {
            capped.emplace_back(truncate_quality(*entry));
        } else {
            capped.emplace_back(std::nullopt);
        }
    }
    const ExpAverage brush = exponential_average_sparse(capped, kExpWindow);

    std::vector<double> prompts;
    prompts.reserve(window.prompts_sent_history.size());
    for (int sent : window.prompts_sent_history) {
        if (sent != 0 && sent != 1) throw InvalidInput("prompt history entry must be 0 or 1");
        prompts.push_back(static_cast<double>(sent));
    }
    const ExpAverage dosage = exponential_average(prompts, kExpWindow);

    StateVector state;
    state.time_of_day = static_cast<double>(time_of_day);
    // The averages are convex combinations of in-range values, but the
    // normalized weights can sum to 1 + 1ulp for some window lengths, so pin
    // the features back into [0,1].
    state.b_bar = std::clamp(brush.value / kMaxBrushSeconds, 0.0, 1.0);
    state.a_bar = std::clamp(dosage.value, 0.0, 1.0);
    state.app_engagement = static_cast<double>(app);
    state.validate();
    return state;
}

StateVector build_modified_state(double frozen_b_bar, int time_of_day, double a_bar) {
    if (time_of_day != 0 && time_of_day != 1) throw InvalidInput("time_of_day must be 0 or 1");
    StateVector state;
    state.time_of_day = static_cast<double>(time_of_day);
    state.b_bar = frozen_b_bar;
    state.a_bar = a_bar;
    state.app_engagement = 0.0;
    state.validate();
    return state;
}

CostComponents cost_components(const StateVector& state, int action, const CostParams& params) {
    state.validate();
    params.validate();
    if (action != 0 && action != 1) throw InvalidInput("action must be 0 or 1");
    CostComponents c;
    c.brush_exceeds = state.b_bar > params.brush_threshold_b ? 1 : 0;
    c.dosage_over_a1 = state.a_bar > params.dosage_threshold_a1 ? 1 : 0;
    c.dosage_over_a2 = state.a_bar > params.dosage_threshold_a2 ? 1 : 0;
    return c;
}

double compute_cost(const StateVector& state, int action, const CostParams& params) {
    const CostComponents c = cost_components(state, action, params);
    if (action == 0) return 0.0;
    return params.xi1 * c.brush_exceeds * c.dosage_over_a1 + params.xi2 * c.dosage_over_a2;
}

RewardRecord compute_reward(double q, double cost) {
    if (!std::isfinite(q)) throw InvalidInput("q not finite");
    if (!(cost >= 0.0) || !std::isfinite(cost)) throw InvalidInput("cost must be >= 0");
    RewardRecord r;
    r.q = q;
    r.cost = cost;
    r.reward = q - cost;
    return r;
}

}  // namespace trialkit
