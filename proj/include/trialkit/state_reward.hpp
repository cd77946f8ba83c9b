#pragma once

#include <optional>
#include <vector>

#include "trialkit/model.hpp"

namespace trialkit {

/// Exponential-average kernel: 14 decision times (7 days, 2 per day) with
/// decay 13/14, weights normalized so constant histories are a fixed point.
inline constexpr int kExpWindow = 14;
inline constexpr double kExpDecay = 13.0 / 14.0;

/// Brushing sessions are scored in seconds, capped here; the cap is also the
/// normalization ceiling for b_bar.
inline constexpr double kMaxBrushSeconds = 180.0;

/// Raw inputs assembled for one (participant, decision time).
struct SensorWindow {
    /// Seconds per past decision time, oldest to newest. An absent entry means
    /// the sensor was silent, which is distinct from an observed 0.
    std::vector<std::optional<double>> brushing_quality_history;
    /// 0/1 per past decision time, oldest to newest.
    std::vector<int> prompts_sent_history;
    std::optional<int> app_opened_prior_day;
};

struct CostParams {
    double xi1 = 1.0;
    double xi2 = 1.0;
    double brush_threshold_b = 0.5;  // on the normalized b_bar scale
    double dosage_threshold_a1 = 0.5;
    double dosage_threshold_a2 = 0.8;

    void validate() const;
};

/// Indicator values that entered the cost, kept for the store.
struct CostComponents {
    int brush_exceeds = 0;   // I[b_bar > brush_threshold_b]
    int dosage_over_a1 = 0;  // I[a_bar > dosage_threshold_a1]
    int dosage_over_a2 = 0;  // I[a_bar > dosage_threshold_a2]
};

struct RewardRecord {
    double q = 0.0;
    double cost = 0.0;
    double reward = 0.0;
    CostComponents components;
};

struct ExpAverage {
    double value = 0.0;
    bool cold_start = false;  // empty history (or all entries absent)
};

/// Weighted mean of the last min(window, size) entries, newest weighted most.
ExpAverage exponential_average(const std::vector<double>& history, int window);

/// Same kernel, skipping absent entries and renormalizing over the present
/// ones so sensor silence never reads as a 0-second session.
ExpAverage exponential_average_sparse(const std::vector<std::optional<double>>& history,
                                      int window);

/// Cap a raw session at [0, kMaxBrushSeconds].
double truncate_quality(double seconds);

/// Features from raw sensors. Throws DataUnavailable when app_opened_prior_day
/// is absent; callers route that to the fallback path.
StateVector build_state(const SensorWindow& window, int time_of_day);

/// The imputed state used beyond the first scheduled day: b_bar frozen at its
/// schedule-formation value and app engagement imputed to 0.
StateVector build_modified_state(double frozen_b_bar, int time_of_day, double a_bar);

/// xi1 I[b_bar > b] I[a_bar > a1] + xi2 I[a_bar > a2] when action is 1, else 0.
/// All indicators are strict.
double compute_cost(const StateVector& state, int action, const CostParams& params);

CostComponents cost_components(const StateVector& state, int action, const CostParams& params);

/// reward = q - cost, with the pieces kept for the store.
RewardRecord compute_reward(double q, double cost);

}  // namespace trialkit
