#include "trialkit/replay.hpp"

#include <cstring>
#include <map>
#include <sstream>

#include "trialkit/codec.hpp"
#include "trialkit/config.hpp"
#include "trialkit/errors.hpp"
#include "trialkit/model.hpp"
#include "trialkit/monitoring.hpp"
#include "trialkit/policy.hpp"
#include "trialkit/rng.hpp"
#include "trialkit/schedule.hpp"

namespace trialkit {

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

bool same_bits(double a, double b) {
  std::uint64_t ba = 0, bb = 0;
  std::memcpy(&ba, &a, sizeof(ba));
  std::memcpy(&bb, &b, sizeof(bb));
  return ba == bb;
}

struct Checker {
  ReplayReport report;

  void mismatch(std::uint64_t seq, std::string field, std::string expected,
                std::string actual) {
    report.mismatches.push_back(
        {seq, std::move(field), std::move(expected), std::move(actual)});
  }
};

}  // namespace

ReplayReport replay_log(const std::vector<EventRecord>& log) {
  Checker ck;
  if (log.empty()) return ck.report;

  // Genesis record: config echo plus the prior moments under version v0.
  const EventRecord& genesis = log.front();
  if (genesis.kind != EventKind::policy_update_succeeded ||
      !genesis.payload.value("genesis", false)) {
    ck.mismatch(genesis.seq, "genesis", "policy_update_succeeded with config echo",
                to_string(genesis.kind));
    return ck.report;
  }

  ServiceConfig config;
  std::map<std::string, PosteriorState> versions;
  try {
    config = ServiceConfig::from_json(genesis.payload.at("config"));
    PosteriorState v0;
    moments_from_json(genesis.payload, v0.mu, v0.sigma);
    v0.version_id = genesis.policy_version;
    versions.emplace(v0.version_id, std::move(v0));
  } catch (const std::exception& e) {
    ck.mismatch(genesis.seq, "genesis", "parseable config echo", e.what());
    return ck.report;
  }

  std::uint64_t prev_seq = 0;
  for (const EventRecord& record : log) {
    if (record.seq <= prev_seq)
      ck.mismatch(record.seq, "seq_order",
                  "> " + std::to_string(prev_seq), std::to_string(record.seq));
    prev_seq = record.seq;

    try {
      switch (record.kind) {
        case EventKind::policy_update_succeeded: {
          if (record.payload.value("genesis", false)) break;
          PosteriorState state;
          moments_from_json(record.payload, state.mu, state.sigma);
          state.update_index = record.payload.at("update_index").get<std::uint64_t>();
          state.trained_on = record.payload.at("trained_on").get<std::size_t>();
          state.version_id = record.payload.at("version").get<std::string>();
          if (state.version_id != record.policy_version)
            ck.mismatch(record.seq, "version", state.version_id, record.policy_version);
          versions.emplace(state.version_id, std::move(state));
          ++ck.report.updates_seen;
          break;
        }
        case EventKind::schedule_built: {
          auto vit = versions.find(record.policy_version);
          if (vit == versions.end()) {
            ck.mismatch(record.seq, "policy_version", "a logged update record",
                        record.policy_version);
            break;
          }
          ScheduleContext ctx;
          ctx.participant_id = record.participant_id;
          ctx.formed_at = record.payload.at("formed_at").get<int>();
          ctx.state_now = state_from_json(record.payload.at("state_now"));
          ctx.state_next = state_from_json(record.payload.at("state_next"));
          ctx.prompts_sent_history =
              record.payload.at("prompts_sent_history").get<std::vector<int>>();
          ctx.trial_seed = config.trial_seed;
          ctx.policy_version = record.policy_version;
          EntryGuard guard = [&](int, double pi, StateKind kind) {
            return !check_probability_range(pi, kind, config.logistic, "", 0)
                        .has_value();
          };
          ActionSchedule rebuilt = build_full_schedule(
              ctx, vit->second, config.logistic, config.quad_nodes, guard);
          std::vector<ScheduleEntry> logged = unpack_entries(
              record.payload.at("entries").get<std::string>(), record.policy_version);
          if (logged.size() != rebuilt.entries.size()) {
            ck.mismatch(record.seq, "entries.size",
                        std::to_string(rebuilt.entries.size()),
                        std::to_string(logged.size()));
            break;
          }
          for (std::size_t k = 0; k < logged.size(); ++k) {
            const ScheduleEntry& want = rebuilt.entries[k];
            const ScheduleEntry& got = logged[k];
            const std::string tag = "entry" + std::to_string(k);
            if (!same_bits(want.pi, got.pi))
              ck.mismatch(record.seq, tag + ".pi", fmt_double(want.pi),
                          fmt_double(got.pi));
            if (want.action != got.action)
              ck.mismatch(record.seq, tag + ".action", std::to_string(want.action),
                          std::to_string(got.action));
            if (want.seed != got.seed)
              ck.mismatch(record.seq, tag + ".seed", std::to_string(want.seed),
                          std::to_string(got.seed));
            if (want.state_kind != got.state_kind)
              ck.mismatch(record.seq, tag + ".kind", to_string(want.state_kind),
                          to_string(got.state_kind));
          }
          ++ck.report.schedules_checked;
          break;
        }
        case EventKind::decision_point: {
          const std::int64_t t = record.payload.at("t").get<std::int64_t>();
          const double pi = record.payload.at("pi").get<double>();
          const int action = record.payload.at("action").get<int>();
          const std::uint64_t seed = record.payload.at("seed").get<std::uint64_t>();
          const StateKind kind =
              state_kind_from_string(record.payload.at("state_kind").get<std::string>());

          const std::uint64_t want_seed = stable_seed(
              config.trial_seed, record.participant_id, static_cast<std::uint64_t>(t));
          if (seed != want_seed)
            ck.mismatch(record.seq, "seed", std::to_string(want_seed),
                        std::to_string(seed));

          double want_pi = 0.5;
          if (kind != StateKind::fixed) {
            auto vit = versions.find(record.policy_version);
            if (vit == versions.end()) {
              ck.mismatch(record.seq, "policy_version", "a logged update record",
                          record.policy_version);
              break;
            }
            const StateVector state = state_from_json(record.payload.at("state"));
            want_pi = action_selection_prob(
                state, marginal_advantage_posterior(vit->second), config.logistic,
                config.quad_nodes);
          }
          if (!same_bits(want_pi, pi))
            ck.mismatch(record.seq, "pi", fmt_double(want_pi), fmt_double(pi));

          const int want_action = sample_action(want_pi, seed);
          if (want_action != action)
            ck.mismatch(record.seq, "action", std::to_string(want_action),
                        std::to_string(action));
          ++ck.report.decisions_checked;
          break;
        }
        default:
          break;
      }
    } catch (const std::exception& e) {
      ck.mismatch(record.seq, "payload", "well-formed payload", e.what());
    }
  }
  return ck.report;
}

}  // namespace trialkit
