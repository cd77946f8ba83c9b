#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trialkit/model.hpp"
#include "trialkit/policy.hpp"

namespace trialkit {

/// 70 days times two decision times: every schedule covers a full trial span
/// from its formation point.
inline constexpr int kScheduleLength = 140;

/// Offsets 0..1 use freshly built states, 2..27 the imputed schedule state,
/// and 28+ the fixed 0.5 tail.
inline constexpr int kActualOffsets = 2;
inline constexpr int kModifiedOffsetEnd = 28;

struct ScheduleEntry {
    int offset = 0;
    double pi = 0.5;
    int action = 0;
    StateKind state_kind = StateKind::fixed;
    std::uint64_t seed = 0;
    std::string policy_version;
};

enum class ScheduleKind { standard, fallback_uniform };

const char* to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& s);

struct ActionSchedule {
    std::string participant_id;
    int formed_at = 0;  // global decision index (day * 2 + slot)
    std::vector<ScheduleEntry> entries;
    ScheduleKind kind = ScheduleKind::standard;
};

/// Everything a schedule build needs; also what gets logged so the build can
/// be replayed bit-for-bit.
struct ScheduleContext {
    std::string participant_id;
    int formed_at = 0;
    StateVector state_now;   // actual state for offset 0
    StateVector state_next;  // actual state for offset 1
    std::vector<int> prompts_sent_history;  // up to 14 entries before formed_at
    std::uint64_t trial_seed = 0;
    std::string policy_version;
};

/// Called with each entry's probability before its action is sampled. Return
/// false to reject; the builder then substitutes a fixed 0.5 entry in place.
using EntryGuard = std::function<bool(int offset, double pi, StateKind kind)>;

/// Guard that accepts everything.
EntryGuard accept_all_guard();

/// Standard schedule: fresh states for the first two offsets, imputed states
/// (frozen b_bar, zero app engagement, dosage propagated through the
/// schedule's own sampled actions) for offsets 2..27, fixed 0.5 beyond.
/// Throws on invalid inputs or numerical failure; callers substitute
/// fallback_uniform_schedule in that case, never a partial schedule.
ActionSchedule build_full_schedule(const ScheduleContext& ctx, const PosteriorState& posterior,
                                   const LogisticParams& params, int quad_nodes,
                                   const EntryGuard& guard = accept_all_guard());

/// All-0.5 fixed schedule. Total: succeeds for any participant id and
/// formation point, with no store or posterior access.
ActionSchedule fallback_uniform_schedule(const std::string& participant_id, int formed_at,
                                         std::uint64_t trial_seed,
                                         const std::string& policy_version);

}  // namespace trialkit
