#pragma once

#include <json.hpp>

#include "trialkit/service.hpp"

namespace trialkit::api {

/// POST /action_selection with {"participant_id": ..., "decision_time": ...}.
/// Replies {"participant_id", "decision_time", "schedule": [140 entries],
/// "schedule_kind"}. Request shape violations throw InvalidInput; everything
/// downstream of a well-formed request is absorbed by the service's fallback
/// behavior, so a well-formed request always gets a schedule.
nlohmann::json handle_action_selection(RlService& service,
                                       const nlohmann::json& request);

/// POST /update with {"now": <global decision step>}. Replies with the active
/// posterior's version metadata after the attempt.
nlohmann::json handle_update_trigger(RlService& service,
                                     const nlohmann::json& request);

}  // namespace trialkit::api
