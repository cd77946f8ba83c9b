#include "trialkit/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "trialkit/api.hpp"
#include "trialkit/errors.hpp"
#include "trialkit/rng.hpp"
#include "trialkit/service.hpp"
#include "trialkit/state_reward.hpp"

namespace trialkit {

namespace {

// Stream tags keep every simulated quantity on its own seed lane, so draws
// are independent of evaluation order.
constexpr std::uint64_t kTagBrush = 0x11;
constexpr std::uint64_t kTagApp = 0x22;
constexpr std::uint64_t kTagMiss = 0x33;
constexpr std::uint64_t kTagResp = 0x44;
constexpr std::uint64_t kTagCategory = 0x55;

std::string participant_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "p%03d", index + 1);
  return buf;
}

}  // namespace

void PopulationParams::validate() const {
  if (!std::isfinite(base_brush_mean) || base_brush_mean < 0.0 ||
      base_brush_mean > kMaxBrushSeconds)
    throw ConfigError("population.base_brush_mean must be in [0, 180]");
  if (!std::isfinite(base_brush_sd) || base_brush_sd < 0.0)
    throw ConfigError("population.base_brush_sd must be >= 0");
  if (!std::isfinite(responsiveness_mean) || !std::isfinite(responsiveness_sd) ||
      responsiveness_sd < 0.0)
    throw ConfigError("population.responsiveness parameters out of range");
  if (!(app_open_prob >= 0.0 && app_open_prob <= 1.0))
    throw ConfigError("population.app_open_prob must be in [0, 1]");
  if (!(miss_prob >= 0.0 && miss_prob <= 1.0))
    throw ConfigError("population.miss_prob must be in [0, 1]");
}

void TrialConfig::validate() const {
  if (n_participants < 1) throw ConfigError("trial.participants must be >= 1");
  if (wave_size < 1) throw ConfigError("trial.wave_size must be >= 1");
  if (wave_interval_days < 0)
    throw ConfigError("trial.wave_interval_days must be >= 0");
  if (duration_days < 1 || duration_days * 2 > 140)
    throw ConfigError("trial.duration_days must be in [1, 70]");
  population.validate();
}

int TrialConfig::enroll_day(int participant_index) const {
  return (participant_index / wave_size) * wave_interval_days;
}

int TrialConfig::total_days() const {
  return enroll_day(n_participants - 1) + duration_days;
}

TrialConfig TrialConfig::from_json(const nlohmann::json& j) {
  require_known_keys(j,
                     {"participants", "wave_size", "wave_interval_days",
                      "duration_days", "seed", "population"},
                     "trial");
  TrialConfig cfg;
  try {
    if (j.contains("participants")) cfg.n_participants = j["participants"].get<int>();
    if (j.contains("wave_size")) cfg.wave_size = j["wave_size"].get<int>();
    if (j.contains("wave_interval_days"))
      cfg.wave_interval_days = j["wave_interval_days"].get<int>();
    if (j.contains("duration_days")) cfg.duration_days = j["duration_days"].get<int>();
    if (j.contains("seed")) {
      if (!j["seed"].is_number_unsigned())
        throw ConfigError("trial.seed must be a non-negative integer");
      cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("population")) {
      const auto& p = j["population"];
      require_known_keys(p,
                         {"base_brush_mean", "base_brush_sd", "responsiveness_mean",
                          "responsiveness_sd", "app_open_prob", "miss_prob",
                          "region_gated"},
                         "trial.population");
      if (p.contains("base_brush_mean"))
        cfg.population.base_brush_mean = p["base_brush_mean"].get<double>();
      if (p.contains("base_brush_sd"))
        cfg.population.base_brush_sd = p["base_brush_sd"].get<double>();
      if (p.contains("responsiveness_mean"))
        cfg.population.responsiveness_mean = p["responsiveness_mean"].get<double>();
      if (p.contains("responsiveness_sd"))
        cfg.population.responsiveness_sd = p["responsiveness_sd"].get<double>();
      if (p.contains("app_open_prob"))
        cfg.population.app_open_prob = p["app_open_prob"].get<double>();
      if (p.contains("miss_prob")) cfg.population.miss_prob = p["miss_prob"].get<double>();
      if (p.contains("region_gated")) {
        if (!p["region_gated"].is_boolean())
          throw ConfigError("trial.population.region_gated must be a boolean");
        cfg.population.region_gated = p["region_gated"].get<bool>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("trial config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json TrialConfig::to_json() const {
  return nlohmann::json{
      {"participants", n_participants},
      {"wave_size", wave_size},
      {"wave_interval_days", wave_interval_days},
      {"duration_days", duration_days},
      {"seed", seed},
      {"population",
       {{"base_brush_mean", population.base_brush_mean},
        {"base_brush_sd", population.base_brush_sd},
        {"responsiveness_mean", population.responsiveness_mean},
        {"responsiveness_sd", population.responsiveness_sd},
        {"app_open_prob", population.app_open_prob},
        {"miss_prob", population.miss_prob},
        {"region_gated", population.region_gated}}}};
}

TrialConfig load_trial_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trial config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("trial config " + path + ": " + e.what());
  }
  return TrialConfig::from_json(j);
}

const char* to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::sensor_timeout:
      return "sensor_timeout";
    case FaultKind::rate_limited_empty:
      return "rate_limited_empty";
    case FaultKind::malformed_payload:
      return "malformed_payload";
    case FaultKind::store_write_fail:
      return "store_write_fail";
    case FaultKind::store_read_fail:
      return "store_read_fail";
    case FaultKind::controller_timeout_blank_schedule:
      return "controller_timeout_blank_schedule";
    case FaultKind::unknown_participant_call:
      return "unknown_participant_call";
  }
  return "unrecognized";
}

FaultKind fault_kind_from_string(const std::string& s) {
  static const std::map<std::string, FaultKind> table{
      {"sensor_timeout", FaultKind::sensor_timeout},
      {"rate_limited_empty", FaultKind::rate_limited_empty},
      {"malformed_payload", FaultKind::malformed_payload},
      {"store_write_fail", FaultKind::store_write_fail},
      {"store_read_fail", FaultKind::store_read_fail},
      {"controller_timeout_blank_schedule",
       FaultKind::controller_timeout_blank_schedule},
      {"unknown_participant_call", FaultKind::unknown_participant_call},
  };
  auto it = table.find(s);
  if (it == table.end()) throw ConfigError("unknown fault kind: " + s);
  return it->second;
}

FaultPlan FaultPlan::from_json(const nlohmann::json& j) {
  require_known_keys(j, {"faults"}, "fault plan");
  FaultPlan plan;
  if (!j.contains("faults")) return plan;
  if (!j["faults"].is_array()) throw ConfigError("fault plan: faults must be an array");
  int next_id = 1;
  for (const auto& item : j["faults"]) {
    require_known_keys(item, {"day", "kind", "participant", "target"}, "fault");
    FaultSpec spec;
    spec.id = next_id++;
    try {
      spec.day = item.at("day").get<int>();
      spec.kind = fault_kind_from_string(item.at("kind").get<std::string>());
      if (item.contains("participant"))
        spec.participant = item["participant"].get<std::string>();
      if (item.contains("target")) spec.target = item["target"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("fault plan: ") + e.what());
    }
    if (spec.day < 0) throw ConfigError("fault.day must be >= 0");
    if (spec.target != "serve" && spec.target != "update")
      throw ConfigError("fault.target must be \"serve\" or \"update\"");
    plan.faults.push_back(std::move(spec));
  }
  return plan;
}

nlohmann::json FaultPlan::to_json() const {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& spec : faults) {
    nlohmann::json item{{"day", spec.day}, {"kind", to_string(spec.kind)}};
    if (spec.participant) item["participant"] = *spec.participant;
    if (spec.target != "serve") item["target"] = spec.target;
    items.push_back(std::move(item));
  }
  return nlohmann::json{{"faults", std::move(items)}};
}

FaultPlan load_fault_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open fault plan: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("fault plan " + path + ": " + e.what());
  }
  return FaultPlan::from_json(j);
}

FaultInjector::FaultInjector(FaultPlan plan) {
  for (auto& spec : plan.faults) items_.push_back({std::move(spec), false});
}

void FaultInjector::begin_day(int day, InMemoryEventStore& store) {
  day_ = day;
  for (auto& item : items_) {
    if (item.fired || item.spec.day != day) continue;
    if (item.spec.kind == FaultKind::store_write_fail) {
      store.arm_write_failure(item.spec.id);
      item.fired = true;
    } else if (item.spec.kind == FaultKind::store_read_fail) {
      store.arm_read_failure(item.spec.id);
      item.fired = true;
    }
  }
}

std::optional<FaultSpec> FaultInjector::take_sensor_fault(
    const std::string& participant_id, const std::string& target) {
  for (auto& item : items_) {
    if (item.fired || item.spec.day > day_) continue;
    if (item.spec.kind != FaultKind::sensor_timeout &&
        item.spec.kind != FaultKind::rate_limited_empty &&
        item.spec.kind != FaultKind::malformed_payload)
      continue;
    if (item.spec.target != target) continue;
    // Update-time faults hit the whole batch, so participant scope only
    // constrains serve-time faults.
    if (target == "serve" && item.spec.participant &&
        *item.spec.participant != participant_id)
      continue;
    item.fired = true;
    return item.spec;
  }
  return std::nullopt;
}

std::vector<FaultSpec> FaultInjector::take_blank_schedule(int day) {
  std::vector<FaultSpec> out;
  for (auto& item : items_) {
    if (item.fired || item.spec.day != day) continue;
    if (item.spec.kind != FaultKind::controller_timeout_blank_schedule) continue;
    item.fired = true;
    out.push_back(item.spec);
  }
  return out;
}

std::vector<FaultSpec> FaultInjector::take_ghost_calls(int day) {
  std::vector<FaultSpec> out;
  for (auto& item : items_) {
    if (item.fired || item.spec.day != day) continue;
    if (item.spec.kind != FaultKind::unknown_participant_call) continue;
    item.fired = true;
    out.push_back(item.spec);
  }
  return out;
}

std::size_t FaultInjector::fired() const {
  std::size_t n = 0;
  for (const auto& item : items_)
    if (item.fired) ++n;
  return n;
}

SimCloud::SimCloud(const TrialConfig& trial, const RateLimit& rate_limit,
                   FaultInjector& injector)
    : trial_(trial), limit_(rate_limit), injector_(injector) {}

void SimCloud::add_participant(const std::string& participant_id, int enroll_day) {
  Truth truth;
  truth.enroll_day = enroll_day;
  truth_.emplace(participant_id, std::move(truth));
}

void SimCloud::begin_step(std::int64_t step) {
  step_ = step;
  requests_ = 0;
}

void SimCloud::record_outcome(const std::string& participant_id, int local_t,
                              std::optional<double> seconds) {
  auto& outcomes = truth_.at(participant_id).outcomes;
  outcomes.resize(static_cast<std::size_t>(local_t) + 1);
  outcomes.back() = seconds;
}

double SimCloud::draw_brushing(const std::string& participant_id, int local_t,
                               bool prompted) const {
  const auto& pop = trial_.population;
  double mean = pop.base_brush_mean;
  if (prompted) mean += responsiveness(participant_id);
  Rng rng(stable_seed(trial_.seed ^ kTagBrush, participant_id,
                      static_cast<std::uint64_t>(local_t)));
  const double value = rng.normal(mean, pop.base_brush_sd);
  return std::clamp(value, 0.0, kMaxBrushSeconds);
}

bool SimCloud::draw_missing(const std::string& participant_id, int local_t) const {
  Rng rng(stable_seed(trial_.seed ^ kTagMiss, participant_id,
                      static_cast<std::uint64_t>(local_t)));
  return rng.bernoulli(trial_.population.miss_prob);
}

int SimCloud::app_flag(const std::string& participant_id, int day) const {
  Rng rng(stable_seed(trial_.seed ^ kTagApp, participant_id,
                      static_cast<std::uint64_t>(day + 1)));
  return rng.bernoulli(trial_.population.app_open_prob) ? 1 : 0;
}

double SimCloud::responsiveness(const std::string& participant_id) const {
  const auto& pop = trial_.population;
  if (pop.responsiveness_sd == 0.0) return pop.responsiveness_mean;
  Rng rng(stable_seed(trial_.seed ^ kTagResp, participant_id, 0));
  return rng.normal(pop.responsiveness_mean, pop.responsiveness_sd);
}

SensorSnapshot SimCloud::window_of(const Truth& truth, int t) const {
  SensorSnapshot snap;
  const int have = std::min(t, static_cast<int>(truth.outcomes.size()));
  const int from = std::max(0, have - kExpWindow);
  for (int i = from; i < have; ++i)
    snap.brushing.push_back(truth.outcomes[static_cast<std::size_t>(i)]);
  return snap;
}

std::optional<SensorFailure> SimCloud::injected(const std::string& participant_id,
                                                const char* target) {
  auto spec = injector_.take_sensor_fault(participant_id, target);
  if (!spec) return std::nullopt;
  SensorFailure failure;
  failure.fault_id = spec->id;
  switch (spec->kind) {
    case FaultKind::sensor_timeout:
      failure.kind = SensorFailureKind::timeout;
      failure.detail = "no response before deadline";
      break;
    case FaultKind::rate_limited_empty:
      failure.kind = SensorFailureKind::rate_limited_empty;
      failure.detail = "empty response body";
      break;
    default:
      failure.kind = SensorFailureKind::malformed;
      failure.detail = "unparseable payload";
      break;
  }
  return failure;
}

bool SimCloud::over_limit() {
  ++requests_;
  return requests_ > limit_.max_per_minute;
}

Fallible<SensorSnapshot> SimCloud::fetch_window(const std::string& participant_id,
                                                int t) {
  if (over_limit())
    return Fallible<SensorSnapshot>::fail(
        {SensorFailureKind::rate_limited_empty, "provider rate limit exceeded",
         std::nullopt});
  if (auto failure = injected(participant_id, "serve"))
    return Fallible<SensorSnapshot>::fail(*failure);
  auto it = truth_.find(participant_id);
  if (it == truth_.end())
    return Fallible<SensorSnapshot>::fail(
        {SensorFailureKind::malformed, "no such participant upstream", std::nullopt});
  SensorSnapshot snap = window_of(it->second, t);
  snap.app_opened_prior_day =
      app_flag(participant_id, it->second.enroll_day + t / 2 - 1);
  return Fallible<SensorSnapshot>::success(std::move(snap));
}

std::map<std::string, Fallible<SensorSnapshot>> SimCloud::fetch_window_batch(
    const std::vector<std::pair<std::string, int>>& requests) {
  std::map<std::string, Fallible<SensorSnapshot>> out;
  const bool limited = over_limit();
  for (const auto& [pid, t] : requests) {
    if (limited) {
      out.emplace(pid, Fallible<SensorSnapshot>::fail(
                           {SensorFailureKind::rate_limited_empty,
                            "provider rate limit exceeded", std::nullopt}));
      continue;
    }
    if (auto failure = injected(pid, "serve")) {
      out.emplace(pid, Fallible<SensorSnapshot>::fail(*failure));
      continue;
    }
    auto it = truth_.find(pid);
    if (it == truth_.end()) {
      out.emplace(pid, Fallible<SensorSnapshot>::fail(
                           {SensorFailureKind::malformed,
                            "no such participant upstream", std::nullopt}));
      continue;
    }
    SensorSnapshot snap = window_of(it->second, t);
    snap.app_opened_prior_day = app_flag(pid, it->second.enroll_day + t / 2 - 1);
    out.emplace(pid, Fallible<SensorSnapshot>::success(std::move(snap)));
  }
  return out;
}

Fallible<RewardBatch> SimCloud::fetch_rewards(const std::vector<RewardQuery>& queries) {
  if (over_limit())
    return Fallible<RewardBatch>::fail({SensorFailureKind::rate_limited_empty,
                                        "provider rate limit exceeded",
                                        std::nullopt});
  if (auto failure = injected("", "update"))
    return Fallible<RewardBatch>::fail(*failure);
  RewardBatch batch;
  for (const auto& query : queries) {
    auto it = truth_.find(query.participant_id);
    std::vector<std::optional<double>> values;
    for (int index : query.decision_indices) {
      std::optional<double> value;
      if (it != truth_.end() &&
          static_cast<std::size_t>(index) < it->second.outcomes.size())
        value = it->second.outcomes[static_cast<std::size_t>(index)];
      values.push_back(value);
    }
    batch.emplace(query.participant_id, std::move(values));
  }
  return Fallible<RewardBatch>::success(std::move(batch));
}

ControllerStandIn::ControllerStandIn(Monitor& monitor, std::uint64_t seed)
    : monitor_(monitor), seed_(seed) {}

int ControllerStandIn::deliver(const std::string& participant_id, std::int64_t step,
                               int scheduled_action, bool blank) {
  Delivery delivery;
  delivery.participant_id = participant_id;
  delivery.step = step;
  delivery.action = blank ? 0 : scheduled_action;
  if (delivery.action == 1) {
    Rng rng(stable_seed(seed_ ^ kTagCategory, participant_id,
                        static_cast<std::uint64_t>(step)));
    delivery.category = 1 + static_cast<int>(rng.index(3));
  }
  deliveries_.push_back(delivery);
  return delivery.action;
}

void ControllerStandIn::record_blank_incident(
    const std::vector<std::string>& participant_ids, std::int64_t step,
    int fault_id) {
  LedgerEntry entry;
  entry.category = LedgerCategory::blank_schedule;
  entry.ts = step;
  entry.payload = {{"participants", participant_ids},
                   {"decision_time", step},
                   {"cause", "controller timeout"},
                   {"fault_id", fault_id}};
  monitor_.record_ledger(entry);
}

void ControllerStandIn::record_api_failure(std::int64_t step,
                                           const std::string& detail) {
  LedgerEntry entry;
  entry.category = LedgerCategory::api_call_failed;
  entry.ts = step;
  entry.payload = {{"detail", detail}};
  monitor_.record_ledger(entry);
}

namespace {

nlohmann::json build_summary(const TrialConfig& trial, const RlService& service,
                             const std::vector<EventRecord>& log,
                             const Monitor& monitor,
                             const ControllerStandIn& controller,
                             const FaultInjector& injector) {
  const int weeks = (trial.total_days() + 6) / 7;
  std::vector<double> pi_sum(static_cast<std::size_t>(weeks), 0.0);
  std::vector<std::size_t> pi_n(static_cast<std::size_t>(weeks), 0);
  std::vector<double> pi_app_sum(static_cast<std::size_t>(weeks), 0.0);
  std::vector<std::size_t> pi_app_n(static_cast<std::size_t>(weeks), 0);

  struct PerParticipant {
    int decisions = 0;
    int prompts_scheduled = 0;
    int fallbacks = 0;
    int prompts_delivered = 0;
  };
  std::map<std::string, PerParticipant> per;

  std::size_t decision_points = 0;
  std::size_t updates_succeeded = 0;
  std::size_t updates_skipped = 0;
  for (const auto& record : log) {
    switch (record.kind) {
      case EventKind::decision_point: {
        ++decision_points;
        auto& row = per[record.participant_id];
        ++row.decisions;
        row.prompts_scheduled += record.payload.at("action").get<int>();
        if (record.payload.value("fallback", false)) ++row.fallbacks;
        const double pi = record.payload.at("pi").get<double>();
        const auto week = static_cast<std::size_t>(record.ts / 14);
        if (week < pi_sum.size()) {
          pi_sum[week] += pi;
          ++pi_n[week];
          if (record.payload.contains("state") &&
              record.payload["state"][4].get<double>() == 1.0) {
            pi_app_sum[week] += pi;
            ++pi_app_n[week];
          }
        }
        break;
      }
      case EventKind::policy_update_succeeded:
        if (!record.payload.value("genesis", false)) ++updates_succeeded;
        break;
      case EventKind::policy_update_skipped:
        ++updates_skipped;
        break;
      default:
        break;
    }
  }

  std::map<std::string, int> category_counts{{"1", 0}, {"2", 0}, {"3", 0}};
  for (const auto& d : controller.deliveries()) {
    if (d.action == 1) {
      ++category_counts[std::to_string(d.category)];
      ++per[d.participant_id].prompts_delivered;
    }
  }

  nlohmann::json weekly = nlohmann::json::array();
  nlohmann::json weekly_app = nlohmann::json::array();
  for (std::size_t w = 0; w < pi_sum.size(); ++w) {
    weekly.push_back(pi_n[w] ? nlohmann::json(pi_sum[w] / static_cast<double>(pi_n[w]))
                             : nlohmann::json());
    weekly_app.push_back(pi_app_n[w] ? nlohmann::json(pi_app_sum[w] /
                                                      static_cast<double>(pi_app_n[w]))
                                     : nlohmann::json());
  }

  nlohmann::json per_participant = nlohmann::json::object();
  for (const auto& [pid, row] : per)
    per_participant[pid] = {{"decisions", row.decisions},
                            {"prompts_scheduled", row.prompts_scheduled},
                            {"prompts_delivered", row.prompts_delivered},
                            {"fallback_decisions", row.fallbacks}};

  std::map<std::string, int> ledger_counts;
  for (const auto& entry : monitor.ledger()) ++ledger_counts[to_string(entry.category)];

  return nlohmann::json{
      {"participants", trial.n_participants},
      {"total_days", trial.total_days()},
      {"decision_points", decision_points},
      {"alerts",
       {{"red", monitor.count(Severity::red)},
        {"yellow", monitor.count(Severity::yellow)}}},
      {"updates", {{"succeeded", updates_succeeded}, {"skipped", updates_skipped}}},
      {"pi_weekly_mean", std::move(weekly)},
      {"pi_weekly_mean_app_engaged", std::move(weekly_app)},
      {"category_counts", category_counts},
      {"ledger_counts", ledger_counts},
      {"per_participant", std::move(per_participant)},
      {"policy_version", service.posterior_snapshot()->version_id},
      {"faults", {{"planned", injector.planned()}, {"fired", injector.fired()}}},
      {"sim_seed", trial.seed},
      {"trial_seed", service.config().trial_seed}};
}

}  // namespace

TrialResult run_trial(const TrialConfig& trial, const ServiceConfig& service_config,
                      const FaultPlan& plan) {
  trial.validate();
  service_config.validate();

  InMemoryEventStore store;
  MemorySink sink;
  FaultInjector injector(plan);
  SimCloud cloud(trial, service_config.rate_limit, injector);
  RlService service(service_config, store, cloud, sink);
  ControllerStandIn controller(service.monitor(), trial.seed);

  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(trial.n_participants));
  for (int i = 0; i < trial.n_participants; ++i) names.push_back(participant_name(i));

  const int total_days = trial.total_days();
  for (int day = 0; day < total_days; ++day) {
    injector.begin_day(day, store);
    for (int i = 0; i < trial.n_participants; ++i) {
      if (trial.enroll_day(i) == day) {
        cloud.add_participant(names[static_cast<std::size_t>(i)], day);
        service.register_participant(names[static_cast<std::size_t>(i)], day);
      }
    }

    for (int slot = 0; slot < 2; ++slot) {
      const std::int64_t step = static_cast<std::int64_t>(day) * 2 + slot;
      cloud.begin_step(step);

      std::vector<FaultSpec> blanks;
      if (slot == 0) {
        for (const auto& ghost : injector.take_ghost_calls(day)) {
          api::handle_action_selection(
              service, {{"participant_id", "unregistered-" + std::to_string(ghost.id)},
                        {"decision_time", step}});
        }
        blanks = injector.take_blank_schedule(day);
      }

      std::vector<int> active;
      for (int i = 0; i < trial.n_participants; ++i) {
        const int local_day = day - trial.enroll_day(i);
        if (local_day >= 0 && local_day < trial.duration_days) active.push_back(i);
      }

      std::set<std::string> blank_pids;
      std::vector<std::pair<int, std::vector<std::string>>> incidents;
      for (const auto& spec : blanks) {
        std::vector<std::string> affected;
        if (spec.participant) {
          affected.push_back(*spec.participant);
        } else {
          for (int i : active) affected.push_back(names[static_cast<std::size_t>(i)]);
        }
        for (const auto& pid : affected) blank_pids.insert(pid);
        incidents.emplace_back(spec.id, std::move(affected));
      }

      for (int i : active) {
        const std::string& pid = names[static_cast<std::size_t>(i)];
        const int local_t = static_cast<int>(step) - trial.enroll_day(i) * 2;
        nlohmann::json response = api::handle_action_selection(
            service, {{"participant_id", pid}, {"decision_time", step}});
        const int scheduled = response["schedule"][0]["action"].get<int>();
        const int delivered =
            controller.deliver(pid, step, scheduled, blank_pids.count(pid) > 0);

        const bool engaged = !trial.population.region_gated ||
                             cloud.app_flag(pid, day - 1) == 1;
        const bool prompted = delivered == 1 && engaged;
        const double seconds = cloud.draw_brushing(pid, local_t, prompted);
        const bool missing = cloud.draw_missing(pid, local_t);
        cloud.record_outcome(pid, local_t,
                             missing ? std::nullopt : std::optional<double>(seconds));
      }

      for (auto& [fault_id, affected] : incidents)
        controller.record_blank_incident(affected, step, fault_id);
    }

    if (day % 7 == 6)
      api::handle_update_trigger(service, {{"now", static_cast<std::int64_t>(day) * 2 + 1}});
  }

  TrialResult result;
  result.log = store.records();
  result.ledger = service.monitor().export_ledger();
  result.red_alerts = service.monitor().count(Severity::red);
  result.yellow_alerts = service.monitor().count(Severity::yellow);
  result.summary =
      build_summary(trial, service, result.log, service.monitor(), controller, injector);
  return result;
}

}  // namespace trialkit
