#include "trialkit/monitoring.hpp"

#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "trialkit/errors.hpp"

namespace trialkit {

const char* to_string(Severity severity) {
    switch (severity) {
        case Severity::red: return "red";
        case Severity::yellow: return "yellow";
    }
    throw InvalidInput("unknown severity");
}

const char* to_string(FailureKind kind) {
    switch (kind) {
        case FailureKind::sensor_timeout: return "sensor_timeout";
        case FailureKind::sensor_empty_unparseable: return "sensor_empty_unparseable";
        case FailureKind::sensor_malformed: return "sensor_malformed";
        case FailureKind::store_write_failed: return "store_write_failed";
        case FailureKind::store_read_failed: return "store_read_failed";
        case FailureKind::unknown_participant: return "unknown_participant";
        case FailureKind::numerical_failure: return "numerical_failure";
    }
    return "unrecognized_failure";
}

Severity severity_of(FailureKind kind) {
    switch (kind) {
        // Fidelity-compromising: lost records, decisions for someone the
        // algorithm does not know, or corrupt numerics.
        case FailureKind::store_write_failed:
        case FailureKind::unknown_participant:
        case FailureKind::numerical_failure:
            return Severity::red;
        // Functionality-compromising: the decision degrades to the fallback
        // but nothing about the stored trial record is wrong.
        case FailureKind::sensor_timeout:
        case FailureKind::sensor_empty_unparseable:
        case FailureKind::sensor_malformed:
        case FailureKind::store_read_failed:
            return Severity::yellow;
    }
    // Fail loud on anything unmapped rather than inventing a lower severity.
    return Severity::red;
}

nlohmann::json to_json(const Alert& alert) {
    nlohmann::json j{
        {"severity", to_string(alert.severity)},
        {"check_id", alert.check_id},
        {"ts", alert.ts},
        {"detail", alert.detail},
        {"delivered", alert.delivered},
    };
    if (alert.participant_id.has_value()) j["participant_id"] = *alert.participant_id;
    return j;
}

const char* to_string(LedgerCategory category) {
    switch (category) {
        case LedgerCategory::update_success: return "update_success";
        case LedgerCategory::update_failure: return "update_failure";
        case LedgerCategory::api_call_failed: return "api_call_failed";
        case LedgerCategory::blank_schedule: return "blank_schedule";
        case LedgerCategory::affected_decision_times: return "affected_decision_times";
        case LedgerCategory::code_change: return "code_change";
        case LedgerCategory::other: return "other";
    }
    throw InvalidInput("unknown ledger category");
}

LedgerCategory ledger_category_from_string(const std::string& s) {
    if (s == "update_success") return LedgerCategory::update_success;
    if (s == "update_failure") return LedgerCategory::update_failure;
    if (s == "api_call_failed") return LedgerCategory::api_call_failed;
    if (s == "blank_schedule") return LedgerCategory::blank_schedule;
    if (s == "affected_decision_times") return LedgerCategory::affected_decision_times;
    if (s == "code_change") return LedgerCategory::code_change;
    if (s == "other") return LedgerCategory::other;
    throw InvalidInput("unknown ledger category: " + s);
}

nlohmann::json to_json(const LedgerEntry& entry) {
    return nlohmann::json{
        {"category", to_string(entry.category)},
        {"ts", entry.ts},
        {"payload", entry.payload},
    };
}

std::optional<Alert> check_prompt_count(const std::string& participant_id,
                                        const std::vector<int>& trailing_actions,
                                        const Thresholds& thresholds, std::int64_t ts) {
    thresholds.validate();
    const int count = std::accumulate(trailing_actions.begin(), trailing_actions.end(), 0);
    const bool window_full = trailing_actions.size() >= 14;
    const bool too_many = count > thresholds.max_weekly;
    const bool too_few = window_full && count < thresholds.min_weekly;
    if (!too_many && !too_few) return std::nullopt;
    Alert alert;
    alert.severity = Severity::red;
    alert.check_id = "prompt_count";
    alert.participant_id = participant_id;
    alert.ts = ts;
    alert.detail = {
        {"count", count},
        {"window", trailing_actions.size()},
        {"min_weekly", thresholds.min_weekly},
        {"max_weekly", thresholds.max_weekly},
        {"side", too_many ? "above_max" : "below_min"},
    };
    return alert;
}

std::optional<Alert> check_probability_range(double pi, StateKind kind,
                                             const LogisticParams& params,
                                             const std::string& participant_id, std::int64_t ts) {
    bool in_range;
    if (kind == StateKind::fixed) {
        in_range = pi == 0.5;
    } else {
        in_range = pi >= params.l_min && pi <= params.l_max;
    }
    if (in_range) return std::nullopt;
    Alert alert;
    alert.severity = Severity::red;
    alert.check_id = "probability_range";
    alert.participant_id = participant_id;
    alert.ts = ts;
    alert.detail = {
        {"pi", pi},
        {"state_kind", to_string(kind)},
        {"l_min", params.l_min},
        {"l_max", params.l_max},
    };
    return alert;
}

Alert classify_failure(const ServiceFailure& failure, std::int64_t ts) {
    Alert alert;
    alert.severity = severity_of(failure.kind);
    alert.check_id = to_string(failure.kind);
    alert.participant_id = failure.participant_id;
    alert.ts = ts;
    alert.detail = {{"detail", failure.detail}};
    if (failure.fault_id.has_value()) alert.detail["fault_id"] = *failure.fault_id;
    return alert;
}

void FileSink::deliver(const Alert& alert) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw StoreWriteError("cannot open alert sink: " + path_);
    out << to_json(alert).dump() << '\n';
}

Monitor::Monitor(AlertSink& sink, std::size_t queue_capacity)
    : sink_(sink), capacity_(queue_capacity == 0 ? 1 : queue_capacity) {}

void Monitor::emit(Alert alert) {
    if (queue_.size() >= capacity_) {
        ++overflows_;
        Alert overflow;
        overflow.severity = Severity::red;
        overflow.check_id = "alert_queue_overflow";
        overflow.ts = alert.ts;
        overflow.detail = {{"dropped_check_id", alert.check_id}, {"overflow_count", overflows_}};
        queue_.pop_front();  // drop the oldest queued alert in favor of the marker
        queue_.push_back(std::move(overflow));
    } else {
        queue_.push_back(std::move(alert));
    }
    if (!paused_) drain();
}

void Monitor::drain() {
    while (!queue_.empty()) {
        Alert alert = std::move(queue_.front());
        queue_.pop_front();
        sink_.deliver(alert);
        alert.delivered = true;
        history_.push_back(std::move(alert));
    }
}

void Monitor::pause_delivery(bool paused) {
    paused_ = paused;
    if (!paused_) drain();
}

std::uint64_t Monitor::record_ledger(LedgerEntry entry) {
    ledger_.push_back(std::move(entry));
    return ledger_.size();
}

std::size_t Monitor::count(Severity severity) const {
    std::size_t n = 0;
    for (const Alert& alert : history_) {
        if (alert.severity == severity) ++n;
    }
    return n;
}

nlohmann::json Monitor::export_ledger(std::int64_t from_ts, std::int64_t to_ts) const {
    nlohmann::json entries = nlohmann::json::array();
    nlohmann::json updates = nlohmann::json::array();
    nlohmann::json blanks = nlohmann::json::array();
    nlohmann::json api_failures = nlohmann::json::array();
    nlohmann::json code_changes = nlohmann::json::array();
    std::map<std::string, int> counts;
    for (const LedgerEntry& entry : ledger_) {
        if (entry.ts < from_ts || entry.ts > to_ts) continue;
        entries.push_back(to_json(entry));
        counts[to_string(entry.category)] += 1;
        switch (entry.category) {
            case LedgerCategory::update_success:
            case LedgerCategory::update_failure:
                updates.push_back(to_json(entry));
                break;
            case LedgerCategory::blank_schedule:
                blanks.push_back(to_json(entry));
                break;
            case LedgerCategory::api_call_failed:
                api_failures.push_back(to_json(entry));
                break;
            case LedgerCategory::code_change:
                code_changes.push_back(to_json(entry));
                break;
            default:
                break;
        }
    }
    return nlohmann::json{
        {"span", {{"from_ts", from_ts}, {"to_ts", to_ts}}},
        {"entries", entries},
        {"counts", counts},
        {"updates", updates},
        {"incidents", {{"blank_schedule", blanks}, {"api_call_failed", api_failures}}},
        {"code_changes", code_changes},
    };
}

nlohmann::json Monitor::export_ledger() const {
    return export_ledger(std::numeric_limits<std::int64_t>::min(),
                         std::numeric_limits<std::int64_t>::max());
}

}  // namespace trialkit
