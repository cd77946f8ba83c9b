#include "trialkit/schedule.hpp"

#include <algorithm>
#include <deque>

#include "trialkit/errors.hpp"
#include "trialkit/rng.hpp"
#include "trialkit/state_reward.hpp"

namespace trialkit {

const char* to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::standard: return "standard";
        case ScheduleKind::fallback_uniform: return "fallback_uniform";
    }
    throw InvalidInput("unknown schedule kind");
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "standard") return ScheduleKind::standard;
    if (s == "fallback_uniform") return ScheduleKind::fallback_uniform;
    throw InvalidInput("unknown schedule kind: " + s);
}

EntryGuard accept_all_guard() {
    return [](int, double, StateKind) { return true; };
}

namespace {

ScheduleEntry make_entry(const ScheduleContext& ctx, int offset, double pi, StateKind kind) {
    ScheduleEntry entry;
    entry.offset = offset;
    entry.pi = pi;
    entry.state_kind = kind;
    entry.seed = stable_seed(ctx.trial_seed, ctx.participant_id,
                             static_cast<std::uint64_t>(ctx.formed_at + offset));
    entry.policy_version = ctx.policy_version;
    entry.action = sample_action(pi, entry.seed);
    return entry;
}

}  // namespace

ActionSchedule build_full_schedule(const ScheduleContext& ctx, const PosteriorState& posterior,
                                   const LogisticParams& params, int quad_nodes,
                                   const EntryGuard& guard) {
    if (ctx.formed_at < 0) throw InvalidInput("formed_at must be >= 0");
    ctx.state_now.validate();
    ctx.state_next.validate();
    if (ctx.state_now.time_of_day != static_cast<double>(ctx.formed_at % 2)) {
        throw InvalidInput("state_now time_of_day disagrees with formed_at");
    }
    if (ctx.state_next.time_of_day != static_cast<double>((ctx.formed_at + 1) % 2)) {
        throw InvalidInput("state_next time_of_day disagrees with formed_at");
    }
    const BetaMarginal beta = marginal_advantage_posterior(posterior);

    ActionSchedule schedule;
    schedule.participant_id = ctx.participant_id;
    schedule.formed_at = ctx.formed_at;
    schedule.kind = ScheduleKind::standard;
    schedule.entries.reserve(kScheduleLength);

    // Dosage recursion: past prompts, then the schedule's own sampled actions.
    std::deque<double> prompts;
    for (int sent : ctx.prompts_sent_history) prompts.push_back(static_cast<double>(sent));

    const double frozen_b_bar = ctx.state_now.b_bar;
    for (int offset = 0; offset < kScheduleLength; ++offset) {
        double pi;
        StateKind kind;
        if (offset < kActualOffsets) {
            kind = StateKind::actual;
            const StateVector& state = offset == 0 ? ctx.state_now : ctx.state_next;
            pi = action_selection_prob(state, beta, params, quad_nodes);
        } else if (offset < kModifiedOffsetEnd) {
            kind = StateKind::modified;
            const std::vector<double> window(prompts.begin(), prompts.end());
            // Same 1ulp overshoot guard as build_state: an all-ones window can
            // average to just above 1.
            const double a_bar =
                std::clamp(exponential_average(window, kExpWindow).value, 0.0, 1.0);
            const StateVector state =
                build_modified_state(frozen_b_bar, (ctx.formed_at + offset) % 2, a_bar);
            pi = action_selection_prob(state, beta, params, quad_nodes);
        } else {
            kind = StateKind::fixed;
            pi = 0.5;
        }
        if (!guard(offset, pi, kind)) {
            pi = 0.5;
            kind = StateKind::fixed;
        }
        ScheduleEntry entry = make_entry(ctx, offset, pi, kind);
        prompts.push_back(static_cast<double>(entry.action));
        if (prompts.size() > static_cast<std::size_t>(kExpWindow)) prompts.pop_front();
        schedule.entries.push_back(std::move(entry));
    }
    return schedule;
}

ActionSchedule fallback_uniform_schedule(const std::string& participant_id, int formed_at,
                                         std::uint64_t trial_seed,
                                         const std::string& policy_version) {
    ActionSchedule schedule;
    schedule.participant_id = participant_id;
    schedule.formed_at = formed_at < 0 ? 0 : formed_at;
    schedule.kind = ScheduleKind::fallback_uniform;
    schedule.entries.reserve(kScheduleLength);
    ScheduleContext ctx;
    ctx.participant_id = participant_id;
    ctx.formed_at = schedule.formed_at;
    ctx.trial_seed = trial_seed;
    ctx.policy_version = policy_version;
    for (int offset = 0; offset < kScheduleLength; ++offset) {
        schedule.entries.push_back(make_entry(ctx, offset, 0.5, StateKind::fixed));
    }
    return schedule;
}

}  // namespace trialkit
