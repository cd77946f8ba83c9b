#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trialkit/config.hpp"
#include "trialkit/policy.hpp"

namespace trialkit {

enum class Severity { red, yellow };

const char* to_string(Severity severity);

/// Typed failures the service can produce. Everything the severity map does
/// not know is treated as red, never silently dropped.
enum class FailureKind {
    sensor_timeout,
    sensor_empty_unparseable,
    sensor_malformed,
    store_write_failed,
    store_read_failed,
    unknown_participant,
    numerical_failure,
};

const char* to_string(FailureKind kind);

struct ServiceFailure {
    FailureKind kind = FailureKind::numerical_failure;
    std::string detail;
    std::optional<std::string> participant_id;
    std::optional<int> fault_id;  // set when an injected fault caused this
};

Severity severity_of(FailureKind kind);

struct Alert {
    Severity severity = Severity::red;
    std::string check_id;
    std::optional<std::string> participant_id;
    std::int64_t ts = 0;
    nlohmann::json detail;
    bool delivered = false;
};

nlohmann::json to_json(const Alert& alert);

enum class LedgerCategory {
    update_success,
    update_failure,
    api_call_failed,
    blank_schedule,
    affected_decision_times,
    code_change,
    other,
};

const char* to_string(LedgerCategory category);
LedgerCategory ledger_category_from_string(const std::string& s);

struct LedgerEntry {
    LedgerCategory category = LedgerCategory::other;
    std::int64_t ts = 0;
    nlohmann::json payload;
};

nlohmann::json to_json(const LedgerEntry& entry);

/// Red alert when the trailing 14-decision prompt count leaves the configured
/// band. The too-many side is always armed; the too-few side only once the
/// window is fully populated, so a short early-trial history is not flagged
/// for having few decisions.
std::optional<Alert> check_prompt_count(const std::string& participant_id,
                                        const std::vector<int>& trailing_actions,
                                        const Thresholds& thresholds, std::int64_t ts);

/// Red alert when a probability about to be sampled is outside its regime:
/// [l_min, l_max] for actual/modified entries, exactly 0.5 for fixed ones.
std::optional<Alert> check_probability_range(double pi, StateKind kind,
                                             const LogisticParams& params,
                                             const std::string& participant_id, std::int64_t ts);

/// Deterministic severity mapping for a typed failure.
Alert classify_failure(const ServiceFailure& failure, std::int64_t ts);

class AlertSink {
public:
    virtual ~AlertSink() = default;
    /// Returns once the alert is accepted; the caller marks it delivered.
    virtual void deliver(const Alert& alert) = 0;
};

class MemorySink : public AlertSink {
public:
    void deliver(const Alert& alert) override { delivered_.push_back(alert); }
    const std::vector<Alert>& delivered() const { return delivered_; }

private:
    std::vector<Alert> delivered_;
};

/// Appends one JSON object per alert.
class FileSink : public AlertSink {
public:
    explicit FileSink(std::string path) : path_(std::move(path)) {}
    void deliver(const Alert& alert) override;

private:
    std::string path_;
};

/// Collects alerts and the green ledger. Emission drains through a bounded
/// queue; if the queue ever overflows the overflowing alert is replaced by a
/// single red alert that says so, so nothing disappears unannounced.
class Monitor {
public:
    explicit Monitor(AlertSink& sink, std::size_t queue_capacity = 1024);

    void emit(Alert alert);
    std::uint64_t record_ledger(LedgerEntry entry);

    const std::vector<Alert>& alerts() const { return history_; }
    const std::vector<LedgerEntry>& ledger() const { return ledger_; }
    std::size_t count(Severity severity) const;
    std::uint64_t overflow_count() const { return overflows_; }

    /// Documentation bundle over [from_ts, to_ts]: update timeline, failed API
    /// calls, blank-schedule incidents, code-change markers, category counts.
    nlohmann::json export_ledger(std::int64_t from_ts, std::int64_t to_ts) const;
    nlohmann::json export_ledger() const;

    /// Test hook: while paused, emitted alerts queue up instead of draining.
    void pause_delivery(bool paused);

private:
    void drain();

    AlertSink& sink_;
    std::size_t capacity_;
    bool paused_ = false;
    std::deque<Alert> queue_;
    std::vector<Alert> history_;
    std::vector<LedgerEntry> ledger_;
    std::uint64_t overflows_ = 0;
};

}  // namespace trialkit
