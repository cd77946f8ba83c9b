#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "trialkit/config.hpp"
#include "trialkit/event_log.hpp"
#include "trialkit/model.hpp"
#include "trialkit/monitoring.hpp"
#include "trialkit/schedule.hpp"
#include "trialkit/sensor.hpp"

namespace trialkit {

/// Decision service. Owns the posterior, answers action-selection calls with
/// a full anticipatory schedule, folds new reward tuples into the posterior
/// on demand, and never lets an internal failure escape to the caller: every
/// failure path degrades to the uniform fallback schedule and raises an
/// alert through the monitor.
///
/// Reads and writes go through the injected EventStore; sensor data comes
/// from the injected SensorSource. Construction writes a genesis
/// policy_update_succeeded record carrying the prior moments and a config
/// echo, which makes a captured log self-contained for replay.
class RlService {
 public:
  RlService(ServiceConfig config, EventStore& store, SensorSource& sensors,
            AlertSink& sink);

  /// Registers a participant starting at the given enrollment day. Serving a
  /// participant that was never registered raises a red alert.
  void register_participant(const std::string& participant_id, int enroll_day);
  bool is_registered(const std::string& participant_id) const;

  /// Serves the schedule for one decision time. `step` is the global decision
  /// index (day * 2 + slot). Always returns a schedule of 140 entries.
  ActionSchedule serve_action_selection(const std::string& participant_id,
                                        std::int64_t step);

  /// Runs one posterior update over every decision point not yet consumed by
  /// a successful update. Returns the active posterior after the attempt
  /// (unchanged when the update was skipped).
  PosteriorState run_weekly_update(std::int64_t step);

  std::shared_ptr<const PosteriorState> posterior_snapshot() const;
  Monitor& monitor() { return monitor_; }
  const ServiceConfig& config() const { return config_; }
  int decisions_served(const std::string& participant_id) const;

 private:
  struct Participant {
    int enroll_day = 0;
    // Everything the update step needs about already-served decisions,
    // indexed by the participant-local decision index.
    std::vector<StateVector> states;
    std::vector<double> pis;
    std::vector<int> actions;
    std::vector<bool> has_state;
    int consumed = 0;          // local indices folded into a successful update
    int quiet_until = -14;     // prompt-count re-alert suppression bound
  };

  void append_genesis();
  EventRecord make_record(EventKind kind, const std::string& participant_id,
                          std::int64_t ts, nlohmann::json payload) const;
  // Appends one record; a write failure raises the mapped red alert and
  // returns false instead of propagating.
  bool try_append(EventKind kind, const std::string& participant_id,
                  std::int64_t ts, nlohmann::json payload);
  void raise(const ServiceFailure& failure, std::int64_t ts);
  void raise_alert(const Alert& alert);
  void record_green(LedgerCategory category, std::int64_t ts,
                    nlohmann::json payload);

  ActionSchedule serve_fallback(const std::string& participant_id,
                                std::int64_t step, int local_t,
                                bool record_decision);
  void finish_serve(const std::string& participant_id, std::int64_t step,
                    int local_t, const ScheduleEntry& first,
                    const std::optional<StateVector>& state, bool fallback,
                    const char* schedule_kind);
  std::vector<int> read_prompt_history(const std::string& participant_id);
  Fallible<SensorSnapshot> fetch_snapshot(const std::string& participant_id,
                                          int local_t, std::int64_t step,
                                          int& attempts);

  void skip_update(std::int64_t step, const std::string& reason,
                   std::optional<int> fault_id, const std::string& detail);

  ServiceConfig config_;
  EventStore& store_;
  SensorSource& sensors_;
  Monitor monitor_;
  std::shared_ptr<const PosteriorState> posterior_;
  std::map<std::string, Participant> participants_;
  std::vector<TrainingTuple> tuples_;
  // One batched sensor prefetch per step when retry.batch_window_fetch is on.
  std::int64_t cache_step_ = -1;
  std::map<std::string, Fallible<SensorSnapshot>> window_cache_;
  mutable std::mutex mutex_;
};

}  // namespace trialkit
