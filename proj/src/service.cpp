#include "trialkit/service.hpp"

#include <algorithm>
#include <utility>

#include "trialkit/codec.hpp"
#include "trialkit/errors.hpp"
#include "trialkit/state_reward.hpp"

namespace trialkit {

namespace {

FailureKind failure_kind_of(SensorFailureKind kind) {
  switch (kind) {
    case SensorFailureKind::timeout:
      return FailureKind::sensor_timeout;
    case SensorFailureKind::rate_limited_empty:
      return FailureKind::sensor_empty_unparseable;
    case SensorFailureKind::malformed:
      return FailureKind::sensor_malformed;
  }
  return FailureKind::sensor_malformed;
}

nlohmann::json snapshot_to_json(const SensorSnapshot& snap) {
  nlohmann::json brushing = nlohmann::json::array();
  for (const auto& b : snap.brushing) {
    if (b)
      brushing.push_back(*b);
    else
      brushing.push_back(nullptr);
  }
  nlohmann::json j{{"brushing", std::move(brushing)}};
  if (snap.app_opened_prior_day)
    j["app_opened_prior_day"] = *snap.app_opened_prior_day;
  else
    j["app_opened_prior_day"] = nullptr;
  return j;
}

std::optional<std::string> pid_or_none(const std::string& pid) {
  if (pid.empty()) return std::nullopt;
  return pid;
}

}  // namespace

RlService::RlService(ServiceConfig config, EventStore& store,
                     SensorSource& sensors, AlertSink& sink)
    : config_(std::move(config)),
      store_(store),
      sensors_(sensors),
      monitor_(sink) {
  config_.validate();
  auto genesis = std::make_shared<PosteriorState>();
  genesis->mu = config_.prior.stacked_mean();
  genesis->sigma = config_.prior.stacked_cov();
  genesis->update_index = 0;
  genesis->trained_on = 0;
  genesis->version_id = "v0";
  posterior_ = std::move(genesis);
  append_genesis();
}

void RlService::append_genesis() {
  nlohmann::json payload = moments_to_json(posterior_->mu, posterior_->sigma);
  payload["genesis"] = true;
  payload["update_index"] = 0;
  payload["trained_on"] = 0;
  payload["config"] = config_.to_json();
  store_.append(
      make_record(EventKind::policy_update_succeeded, "", -1, std::move(payload)));
}

void RlService::register_participant(const std::string& participant_id,
                                     int enroll_day) {
  std::lock_guard lock(mutex_);
  if (participant_id.empty())
    throw InvalidInput("participant id must be non-empty");
  if (enroll_day < 0) throw InvalidInput("enroll_day must be >= 0");
  if (participants_.count(participant_id))
    throw InvalidInput("participant already registered: " + participant_id);
  Participant meta;
  meta.enroll_day = enroll_day;
  participants_.emplace(participant_id, std::move(meta));
  try_append(EventKind::api_call, participant_id,
             static_cast<std::int64_t>(enroll_day) * 2,
             {{"endpoint", "register"}, {"enroll_day", enroll_day}});
}

bool RlService::is_registered(const std::string& participant_id) const {
  std::lock_guard lock(mutex_);
  return participants_.count(participant_id) > 0;
}

int RlService::decisions_served(const std::string& participant_id) const {
  std::lock_guard lock(mutex_);
  auto it = participants_.find(participant_id);
  return it == participants_.end() ? 0
                                   : static_cast<int>(it->second.actions.size());
}

std::shared_ptr<const PosteriorState> RlService::posterior_snapshot() const {
  std::lock_guard lock(mutex_);
  return posterior_;
}

ActionSchedule RlService::serve_action_selection(
    const std::string& participant_id, std::int64_t step) {
  std::lock_guard lock(mutex_);
  const bool call_recorded =
      try_append(EventKind::api_call, participant_id, step,
                 {{"endpoint", "action_selection"}, {"step", step}});

  auto it = participants_.find(participant_id);
  if (it == participants_.end()) {
    raise({FailureKind::unknown_participant, "participant not registered",
           participant_id, std::nullopt},
          step);
    return serve_fallback(participant_id, step, -1, false);
  }
  const int local_t = static_cast<int>(step) - it->second.enroll_day * 2;
  if (local_t < 0 || local_t >= kScheduleLength) {
    raise({FailureKind::unknown_participant, "outside enrollment window",
           participant_id, std::nullopt},
          step);
    return serve_fallback(participant_id, step, -1, false);
  }
  if (!call_recorded) return serve_fallback(participant_id, step, local_t, true);

  try {
    int attempts = 0;
    Fallible<SensorSnapshot> fetched =
        fetch_snapshot(participant_id, local_t, step, attempts);
    if (!fetched.ok()) {
      const SensorFailure& f = *fetched.failure;
      raise({failure_kind_of(f.kind), f.detail, participant_id, f.fault_id},
            step);
      try_append(EventKind::sensor_fetch, participant_id, step,
                 {{"status", "failed"},
                  {"kind", to_string(f.kind)},
                  {"attempts", attempts}});
      return serve_fallback(participant_id, step, local_t, true);
    }
    const SensorSnapshot& snap = *fetched.value;
    {
      nlohmann::json payload = snapshot_to_json(snap);
      payload["status"] = "ok";
      payload["attempts"] = attempts;
      if (!try_append(EventKind::sensor_fetch, participant_id, step,
                      std::move(payload)))
        return serve_fallback(participant_id, step, local_t, true);
    }

    std::vector<int> prompts;
    try {
      prompts = read_prompt_history(participant_id);
    } catch (const StoreReadError& e) {
      raise({FailureKind::store_read_failed, e.what(), participant_id,
             e.fault_id},
            step);
      return serve_fallback(participant_id, step, local_t, true);
    }

    ScheduleContext ctx;
    ctx.participant_id = participant_id;
    ctx.formed_at = static_cast<int>(step);
    ctx.prompts_sent_history = prompts;
    ctx.trial_seed = config_.trial_seed;
    ctx.policy_version = posterior_->version_id;
    try {
      SensorWindow window{snap.brushing, prompts, snap.app_opened_prior_day};
      ctx.state_now = build_state(window, static_cast<int>(step % 2));
      ctx.state_next = build_state(window, static_cast<int>((step + 1) % 2));
    } catch (const DataUnavailable& e) {
      raise({FailureKind::sensor_malformed, e.what(), participant_id,
             std::nullopt},
            step);
      return serve_fallback(participant_id, step, local_t, true);
    }

    EntryGuard guard = [&](int offset, double pi, StateKind kind) {
      auto alert =
          check_probability_range(pi, kind, config_.logistic, participant_id, step);
      if (alert) {
        alert->detail["offset"] = offset;
        raise_alert(*alert);
        return false;
      }
      return true;
    };

    ActionSchedule schedule;
    try {
      schedule = build_full_schedule(ctx, *posterior_, config_.logistic,
                                     config_.quad_nodes, guard);
    } catch (const NumericalFailure& e) {
      raise({FailureKind::numerical_failure, e.what(), participant_id,
             std::nullopt},
            step);
      return serve_fallback(participant_id, step, local_t, true);
    }

    nlohmann::json built{{"formed_at", ctx.formed_at},
                         {"state_now", state_to_json(ctx.state_now)},
                         {"state_next", state_to_json(ctx.state_next)},
                         {"prompts_sent_history", ctx.prompts_sent_history},
                         {"entries", pack_entries(schedule.entries)}};
    if (!try_append(EventKind::schedule_built, participant_id, step,
                    std::move(built)))
      return serve_fallback(participant_id, step, local_t, true);

    finish_serve(participant_id, step, local_t, schedule.entries.front(),
                 ctx.state_now, false, to_string(schedule.kind));
    return schedule;
  } catch (const std::exception& e) {
    // Nothing specific expected here; anything that slips through still gets
    // a red alert and a served fallback rather than an exception to the
    // caller.
    Alert alert;
    alert.severity = Severity::red;
    alert.check_id = "unhandled_exception";
    alert.participant_id = participant_id;
    alert.ts = step;
    alert.detail = {{"detail", e.what()}};
    raise_alert(alert);
    return serve_fallback(participant_id, step, local_t, true);
  }
}

ActionSchedule RlService::serve_fallback(const std::string& participant_id,
                                         std::int64_t step, int local_t,
                                         bool record_decision) {
  ActionSchedule schedule =
      fallback_uniform_schedule(participant_id, std::max<int>(0, static_cast<int>(step)),
                                config_.trial_seed, posterior_->version_id);
  try_append(EventKind::fallback_invoked, participant_id, step,
             {{"step", step}});
  if (record_decision) {
    finish_serve(participant_id, step, local_t, schedule.entries.front(),
                 std::nullopt, true, to_string(schedule.kind));
  } else {
    try_append(EventKind::schedule_pushed, participant_id, step,
               {{"length", kScheduleLength},
                {"schedule_kind", to_string(schedule.kind)}});
  }
  return schedule;
}

void RlService::finish_serve(const std::string& participant_id,
                             std::int64_t step, int local_t,
                             const ScheduleEntry& first,
                             const std::optional<StateVector>& state,
                             bool fallback, const char* schedule_kind) {
  Participant& meta = participants_.at(participant_id);
  meta.states.push_back(state ? *state : StateVector{});
  meta.has_state.push_back(state.has_value());
  meta.pis.push_back(first.pi);
  meta.actions.push_back(first.action);

  nlohmann::json payload{{"t", step},          {"local_t", local_t},
                         {"pi", first.pi},     {"action", first.action},
                         {"seed", first.seed}, {"state_kind", to_string(first.state_kind)},
                         {"fallback", fallback}};
  if (state) payload["state"] = state_to_json(*state);
  try_append(EventKind::decision_point, participant_id, step, std::move(payload));
  try_append(EventKind::schedule_pushed, participant_id, step,
             {{"length", kScheduleLength}, {"schedule_kind", schedule_kind}});

  if (local_t >= meta.quiet_until) {
    const auto& acts = meta.actions;
    const std::size_t from =
        acts.size() > static_cast<std::size_t>(kExpWindow)
            ? acts.size() - static_cast<std::size_t>(kExpWindow)
            : 0;
    std::vector<int> window(acts.begin() + static_cast<std::ptrdiff_t>(from),
                            acts.end());
    auto alert = check_prompt_count(participant_id, window, config_.thresholds, step);
    if (alert) {
      raise_alert(*alert);
      // One alert per window span, not one per decision while the condition
      // persists.
      meta.quiet_until = local_t + kExpWindow;
    }
  }
}

std::vector<int> RlService::read_prompt_history(const std::string& participant_id) {
  LogFilter filter;
  filter.participant_id = participant_id;
  filter.kind = EventKind::decision_point;
  filter.last_n = static_cast<std::size_t>(kExpWindow);
  std::vector<int> prompts;
  for (const auto& record : store_.read(filter))
    prompts.push_back(record.payload.at("action").get<int>());
  return prompts;
}

Fallible<SensorSnapshot> RlService::fetch_snapshot(
    const std::string& participant_id, int local_t, std::int64_t step,
    int& attempts) {
  attempts = 1;
  if (config_.retry.batch) {
    if (cache_step_ != step) {
      std::vector<std::pair<std::string, int>> requests;
      for (const auto& [pid, meta] : participants_) {
        const int lt = static_cast<int>(step) - meta.enroll_day * 2;
        if (lt >= 0 && lt < kScheduleLength) requests.emplace_back(pid, lt);
      }
      window_cache_ = sensors_.fetch_window_batch(requests);
      cache_step_ = step;
    }
    auto it = window_cache_.find(participant_id);
    if (it != window_cache_.end()) return it->second;
  }
  Fallible<SensorSnapshot> result = sensors_.fetch_window(participant_id, local_t);
  while (!result.ok() && attempts < config_.retry.max_attempts) {
    ++attempts;
    result = sensors_.fetch_window(participant_id, local_t);
  }
  return result;
}

PosteriorState RlService::run_weekly_update(std::int64_t step) {
  std::lock_guard lock(mutex_);
  try_append(EventKind::api_call, "", step,
             {{"endpoint", "update_trigger"}, {"step", step}});

  struct Span {
    std::string pid;
    int from = 0;
    int to = 0;
  };
  std::vector<Span> spans;
  for (const auto& [pid, meta] : participants_) {
    const int to = static_cast<int>(meta.actions.size());
    if (to > meta.consumed) spans.push_back({pid, meta.consumed, to});
  }

  RewardBatch rewards;
  if (!spans.empty()) {
    std::vector<RewardQuery> queries;
    for (const auto& span : spans) {
      RewardQuery query;
      query.participant_id = span.pid;
      for (int i = span.from; i < span.to; ++i)
        query.decision_indices.push_back(i);
      queries.push_back(std::move(query));
    }
    Fallible<RewardBatch> result = sensors_.fetch_rewards(queries);
    try_append(EventKind::sensor_fetch, "", step,
               {{"endpoint", "rewards"},
                {"status", result.ok() ? "ok" : "failed"},
                {"participants", queries.size()}});
    if (!result.ok()) {
      const SensorFailure& f = *result.failure;
      skip_update(step, to_string(f.kind), f.fault_id, f.detail);
      return *posterior_;
    }
    rewards = std::move(*result.value);
  }

  std::vector<TrainingTuple> staged;
  for (const auto& span : spans) {
    const Participant& meta = participants_.at(span.pid);
    const auto found = rewards.find(span.pid);
    for (int i = span.from; i < span.to; ++i) {
      std::optional<double> q_raw;
      if (found != rewards.end()) {
        const auto pos = static_cast<std::size_t>(i - span.from);
        if (pos < found->second.size()) q_raw = found->second[pos];
      }
      const double pi = meta.pis[static_cast<std::size_t>(i)];
      const int action = meta.actions[static_cast<std::size_t>(i)];
      if (!meta.has_state[static_cast<std::size_t>(i)] || !q_raw) {
        // Excluded for good: fallback decisions have no usable state, and a
        // session the sensor never reported cannot be backfilled later.
        try_append(EventKind::reward_constructed, span.pid, step,
                   {{"local_t", i},
                    {"complete", false},
                    {"reason", meta.has_state[static_cast<std::size_t>(i)]
                                   ? "missing_quality"
                                   : "fallback_decision"},
                    {"pi", pi},
                    {"action", action}});
        continue;
      }
      const StateVector& state = meta.states[static_cast<std::size_t>(i)];
      const double q = truncate_quality(*q_raw);
      const CostComponents comps = cost_components(state, action, config_.cost);
      const double cost = compute_cost(state, action, config_.cost);
      const RewardRecord reward = compute_reward(q, cost);
      try_append(EventKind::reward_constructed, span.pid, step,
                 {{"local_t", i},
                  {"complete", true},
                  {"q_raw", *q_raw},
                  {"q", reward.q},
                  {"cost", reward.cost},
                  {"reward", reward.reward},
                  {"components",
                   {{"brush_exceeds", comps.brush_exceeds},
                    {"dosage_over_a1", comps.dosage_over_a1},
                    {"dosage_over_a2", comps.dosage_over_a2}}},
                  {"pi", pi},
                  {"action", action},
                  {"state", state_to_json(state)}});
      TrainingTuple tuple;
      tuple.participant_id = span.pid;
      tuple.decision_index = i;
      tuple.state = state;
      tuple.pi = pi;
      tuple.action = action;
      tuple.reward = reward.reward;
      tuple.complete = true;
      staged.push_back(std::move(tuple));
    }
  }

  std::vector<TrainingTuple> all = tuples_;
  all.insert(all.end(), staged.begin(), staged.end());

  PosteriorState next;
  try {
    next = posterior_update(config_.prior, all, posterior_->update_index);
  } catch (const NumericalFailure& e) {
    raise({FailureKind::numerical_failure, e.what(), std::nullopt, std::nullopt},
          step);
    skip_update(step, "numerical_failure", std::nullopt, e.what());
    return *posterior_;
  }

  nlohmann::json payload = moments_to_json(next.mu, next.sigma);
  payload["update_index"] = next.update_index;
  payload["version"] = next.version_id;
  payload["trained_on"] = next.trained_on;
  payload["new_tuples"] = staged.size();
  EventRecord record =
      make_record(EventKind::policy_update_succeeded, "", step, std::move(payload));
  record.policy_version = next.version_id;
  try {
    store_.append(std::move(record));
  } catch (const StoreWriteError& e) {
    // The new posterior is not adopted unless its update record landed.
    raise({FailureKind::store_write_failed, e.what(), std::nullopt, e.fault_id},
          step);
    skip_update(step, "store_write_failed", e.fault_id, e.what());
    return *posterior_;
  }

  tuples_ = std::move(all);
  for (const auto& span : spans)
    participants_.at(span.pid).consumed = span.to;
  posterior_ = std::make_shared<const PosteriorState>(std::move(next));
  record_green(LedgerCategory::update_success, step,
               {{"version", posterior_->version_id},
                {"update_index", posterior_->update_index},
                {"trained_on", posterior_->trained_on},
                {"new_tuples", staged.size()}});
  return *posterior_;
}

void RlService::skip_update(std::int64_t step, const std::string& reason,
                            std::optional<int> fault_id,
                            const std::string& detail) {
  nlohmann::json payload{{"reason", reason},
                         {"detail", detail},
                         {"retained_version", posterior_->version_id}};
  if (fault_id) payload["fault_id"] = *fault_id;
  try_append(EventKind::policy_update_skipped, "", step, std::move(payload));
  nlohmann::json green{{"reason", reason}, {"detail", detail}};
  if (fault_id) green["fault_id"] = *fault_id;
  record_green(LedgerCategory::update_failure, step, std::move(green));
}

EventRecord RlService::make_record(EventKind kind,
                                   const std::string& participant_id,
                                   std::int64_t ts,
                                   nlohmann::json payload) const {
  EventRecord record;
  record.ts = ts;
  record.participant_id = participant_id;
  record.kind = kind;
  record.payload = std::move(payload);
  record.policy_version = posterior_->version_id;
  return record;
}

bool RlService::try_append(EventKind kind, const std::string& participant_id,
                           std::int64_t ts, nlohmann::json payload) {
  try {
    store_.append(make_record(kind, participant_id, ts, std::move(payload)));
    return true;
  } catch (const StoreWriteError& e) {
    raise({FailureKind::store_write_failed, e.what(), pid_or_none(participant_id),
           e.fault_id},
          ts);
    return false;
  }
}

void RlService::raise(const ServiceFailure& failure, std::int64_t ts) {
  raise_alert(classify_failure(failure, ts));
}

void RlService::raise_alert(const Alert& alert) {
  monitor_.emit(alert);
  EventRecord record = make_record(
      EventKind::alert, alert.participant_id.value_or(""), alert.ts, to_json(alert));
  try {
    store_.append(std::move(record));
  } catch (const StoreWriteError& e) {
    // Keep the monitor informed but do not try the store again from here.
    Alert escalation;
    escalation.severity = Severity::red;
    escalation.check_id = "alert_record_write_failed";
    escalation.participant_id = alert.participant_id;
    escalation.ts = alert.ts;
    escalation.detail = {{"detail", e.what()}};
    if (e.fault_id) escalation.detail["fault_id"] = *e.fault_id;
    monitor_.emit(std::move(escalation));
  }
}

void RlService::record_green(LedgerCategory category, std::int64_t ts,
                             nlohmann::json payload) {
  LedgerEntry entry;
  entry.category = category;
  entry.ts = ts;
  entry.payload = payload;
  monitor_.record_ledger(entry);
  nlohmann::json record_payload{{"category", to_string(category)},
                                {"payload", std::move(payload)}};
  try {
    store_.append(make_record(EventKind::ledger, "", ts, std::move(record_payload)));
  } catch (const StoreWriteError& e) {
    raise({FailureKind::store_write_failed,
           std::string("ledger append: ") + e.what(), std::nullopt, e.fault_id},
          ts);
  }
}

}  // namespace trialkit
