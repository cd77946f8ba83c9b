#include "trialkit/api.hpp"

#include "trialkit/codec.hpp"
#include "trialkit/config.hpp"
#include "trialkit/errors.hpp"

namespace trialkit::api {

nlohmann::json handle_action_selection(RlService& service,
                                       const nlohmann::json& request) {
  require_known_keys(request, {"participant_id", "decision_time"}, "request");
  if (!request.contains("participant_id") || !request["participant_id"].is_string())
    throw InvalidInput("request.participant_id must be a string");
  if (!request.contains("decision_time") ||
      !request["decision_time"].is_number_integer())
    throw InvalidInput("request.decision_time must be an integer");

  const auto participant_id = request["participant_id"].get<std::string>();
  const auto step = request["decision_time"].get<std::int64_t>();
  ActionSchedule schedule = service.serve_action_selection(participant_id, step);

  nlohmann::json entries = nlohmann::json::array();
  for (const auto& entry : schedule.entries)
    entries.push_back(schedule_entry_to_json(entry));
  return nlohmann::json{{"participant_id", participant_id},
                        {"decision_time", step},
                        {"schedule_kind", to_string(schedule.kind)},
                        {"schedule", std::move(entries)}};
}

nlohmann::json handle_update_trigger(RlService& service,
                                     const nlohmann::json& request) {
  require_known_keys(request, {"now"}, "request");
  if (!request.contains("now") || !request["now"].is_number_integer())
    throw InvalidInput("request.now must be an integer");

  const PosteriorState posterior =
      service.run_weekly_update(request["now"].get<std::int64_t>());
  return nlohmann::json{{"version", posterior.version_id},
                        {"update_index", posterior.update_index},
                        {"trained_on", posterior.trained_on}};
}

}  // namespace trialkit::api
