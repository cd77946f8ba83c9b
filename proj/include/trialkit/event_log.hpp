#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace trialkit {

enum class EventKind {
    decision_point,
    schedule_built,
    schedule_pushed,
    fallback_invoked,
    sensor_fetch,
    reward_constructed,
    policy_update_succeeded,
    policy_update_skipped,
    api_call,
    alert,
    ledger,
};

const char* to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& s);

struct EventRecord {
    std::uint64_t seq = 0;  // assigned by the store, strictly increasing from 1
    std::int64_t ts = 0;    // simulated clock: global decision step
    std::string participant_id;  // empty for trial-level records
    EventKind kind = EventKind::api_call;
    nlohmann::json payload;
    std::string policy_version;
};

nlohmann::json to_json(const EventRecord& record);
EventRecord event_from_json(const nlohmann::json& j);

struct LogFilter {
    std::optional<std::string> participant_id;
    std::optional<EventKind> kind;
    std::uint64_t min_seq = 0;
    /// Keep only the newest n matches.
    std::optional<std::size_t> last_n;
};

/// Append-only record store. Appends assign seq and throw StoreWriteError on
/// failure; reads throw StoreReadError. Records are immutable once appended.
class EventStore {
public:
    virtual ~EventStore() = default;
    virtual std::uint64_t append(EventRecord record) = 0;
    virtual std::vector<EventRecord> read(const LogFilter& filter) const = 0;
    virtual std::size_t size() const = 0;
};

/// In-memory store with an index over (participant, kind) so per-participant
/// history reads stay cheap. One-shot fault arming supports injection tests:
/// an armed failure fires on the next matching call, then clears.
class InMemoryEventStore : public EventStore {
public:
    std::uint64_t append(EventRecord record) override;
    std::vector<EventRecord> read(const LogFilter& filter) const override;
    std::size_t size() const override { return records_.size(); }

    const std::vector<EventRecord>& records() const { return records_; }

    void arm_write_failure(std::optional<int> fault_id);
    void arm_read_failure(std::optional<int> fault_id);

private:
    std::vector<EventRecord> records_;
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> index_;
    mutable std::optional<std::optional<int>> pending_write_fault_;
    mutable std::optional<std::optional<int>> pending_read_fault_;
};

/// One JSON object per line, in seq order.
void write_jsonl(const std::string& path, const std::vector<EventRecord>& records);
std::vector<EventRecord> read_jsonl(const std::string& path);

}  // namespace trialkit
