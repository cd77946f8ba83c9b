#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "trialkit/model.hpp"
#include "trialkit/schedule.hpp"

namespace trialkit {

/// State as a JSON array [bias, time_of_day, b_bar, a_bar, app_engagement].
nlohmann::json state_to_json(const StateVector& state);
StateVector state_from_json(const nlohmann::json& j);

/// Posterior moments as flat arrays (sigma row-major), exact through a JSON
/// round trip.
nlohmann::json moments_to_json(const Vec15& mu, const Mat15& sigma);
void moments_from_json(const nlohmann::json& j, Vec15& mu, Mat15& sigma);

/// Schedule entries packed into one compact string, one token per entry:
/// "<pi bits hex>:<action>:<seed hex>:<kind char>;". Probabilities travel as
/// raw bit patterns so unpacking is bit-exact.
std::string pack_entries(const std::vector<ScheduleEntry>& entries);
std::vector<ScheduleEntry> unpack_entries(const std::string& packed,
                                          const std::string& policy_version);

nlohmann::json schedule_entry_to_json(const ScheduleEntry& entry);

}  // namespace trialkit
