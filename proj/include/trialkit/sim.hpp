#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "trialkit/config.hpp"
#include "trialkit/event_log.hpp"
#include "trialkit/monitoring.hpp"
#include "trialkit/sensor.hpp"

namespace trialkit {

/// Synthetic population behavior. Brushing sessions are truncated normal
/// draws; a prompt shifts the mean by the participant's responsiveness,
/// optionally only when the participant engaged with the app the prior day.
struct PopulationParams {
  double base_brush_mean = 80.0;
  double base_brush_sd = 30.0;
  double responsiveness_mean = 0.0;
  double responsiveness_sd = 0.0;
  double app_open_prob = 0.7;
  double miss_prob = 0.0;      // chance a session never reaches the cloud
  bool region_gated = true;    // prompts only move engaged participants

  void validate() const;
};

struct TrialConfig {
  int n_participants = 70;
  int wave_size = 5;
  int wave_interval_days = 14;
  int duration_days = 70;  // per participant; two decisions per day
  std::uint64_t seed = 0xC0FFEE;
  PopulationParams population;

  void validate() const;
  static TrialConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  int enroll_day(int participant_index) const;
  int total_days() const;
};

TrialConfig load_trial_config(const std::string& path);

enum class FaultKind {
  sensor_timeout,
  rate_limited_empty,
  malformed_payload,
  store_write_fail,
  store_read_fail,
  controller_timeout_blank_schedule,
  unknown_participant_call,
};

const char* to_string(FaultKind kind);
FaultKind fault_kind_from_string(const std::string& s);

struct FaultSpec {
  int id = 0;  // 1-based position in the plan
  int day = 0;
  FaultKind kind = FaultKind::sensor_timeout;
  std::optional<std::string> participant;  // absent: first match / all affected
  std::string target = "serve";            // sensor faults: "serve" or "update"
};

struct FaultPlan {
  std::vector<FaultSpec> faults;

  static FaultPlan from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

FaultPlan load_fault_plan(const std::string& path);

/// Hands each planned fault to the right seam exactly once, on or after its
/// scheduled day.
class FaultInjector {
 public:
  FaultInjector() = default;
  explicit FaultInjector(FaultPlan plan);

  /// Arms store faults scheduled for this day directly on the store.
  void begin_day(int day, InMemoryEventStore& store);

  /// First armed, unfired sensor fault matching the participant and target;
  /// marks it fired.
  std::optional<FaultSpec> take_sensor_fault(const std::string& participant_id,
                                             const std::string& target);

  std::vector<FaultSpec> take_blank_schedule(int day);
  std::vector<FaultSpec> take_ghost_calls(int day);

  std::size_t planned() const { return items_.size(); }
  std::size_t fired() const;

 private:
  struct Item {
    FaultSpec spec;
    bool fired = false;
  };
  std::vector<Item> items_;
  int day_ = -1;
};

/// Stands in for the wearable vendor's cloud: serves sensor windows and
/// update-time outcome batches from simulated ground truth, enforces the
/// provider rate limit per decision step, and lets the injector corrupt any
/// individual response.
class SimCloud : public SensorSource {
 public:
  SimCloud(const TrialConfig& trial, const RateLimit& rate_limit,
           FaultInjector& injector);

  void add_participant(const std::string& participant_id, int enroll_day);
  void begin_step(std::int64_t step);

  /// Ground truth recorded by the harness after each decision's session.
  void record_outcome(const std::string& participant_id, int local_t,
                      std::optional<double> seconds);

  double draw_brushing(const std::string& participant_id, int local_t,
                       bool prompted) const;
  bool draw_missing(const std::string& participant_id, int local_t) const;
  /// App-opened flag for a global day; defined from the day before enrollment.
  int app_flag(const std::string& participant_id, int day) const;
  double responsiveness(const std::string& participant_id) const;

  Fallible<SensorSnapshot> fetch_window(const std::string& participant_id,
                                        int t) override;
  std::map<std::string, Fallible<SensorSnapshot>> fetch_window_batch(
      const std::vector<std::pair<std::string, int>>& requests) override;
  Fallible<RewardBatch> fetch_rewards(
      const std::vector<RewardQuery>& queries) override;

  int requests_this_step() const { return requests_; }

 private:
  struct Truth {
    int enroll_day = 0;
    std::vector<std::optional<double>> outcomes;  // by local decision index
  };

  SensorSnapshot window_of(const Truth& truth, int t) const;
  bool over_limit();
  std::optional<SensorFailure> injected(const std::string& participant_id,
                                        const char* target);

  TrialConfig trial_;
  RateLimit limit_;
  FaultInjector& injector_;
  std::map<std::string, Truth> truth_;
  std::int64_t step_ = -1;
  int requests_ = 0;
};

/// Receives pushed schedules and "delivers" prompts to participants. A blank
/// incident (controller never got the schedule) delivers nothing and lands in
/// the green ledger with the affected participants.
class ControllerStandIn {
 public:
  struct Delivery {
    std::string participant_id;
    std::int64_t step = 0;
    int action = 0;
    int category = 0;  // 1..3 when a prompt went out, 0 otherwise
  };

  ControllerStandIn(Monitor& monitor, std::uint64_t seed);

  int deliver(const std::string& participant_id, std::int64_t step,
              int scheduled_action, bool blank);
  void record_blank_incident(const std::vector<std::string>& participant_ids,
                             std::int64_t step, int fault_id);
  void record_api_failure(std::int64_t step, const std::string& detail);

  const std::vector<Delivery>& deliveries() const { return deliveries_; }

 private:
  Monitor& monitor_;
  std::uint64_t seed_;
  std::vector<Delivery> deliveries_;
};

struct TrialResult {
  std::vector<EventRecord> log;
  nlohmann::json ledger;
  nlohmann::json summary;
  std::size_t red_alerts = 0;
  std::size_t yellow_alerts = 0;
};

/// Full simulated deployment: waves enroll, every active participant is
/// served twice a day, ground-truth brushing follows each delivery, and the
/// posterior refreshes at the end of every Sunday.
TrialResult run_trial(const TrialConfig& trial, const ServiceConfig& service_config,
                      const FaultPlan& plan = {});

}  // namespace trialkit
