#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trialkit {

/// The three ways a sensor request comes back unusable. A rate-limited
/// request manifests as an empty response body, hence the middle name.
enum class SensorFailureKind { timeout, rate_limited_empty, malformed };

inline const char* to_string(SensorFailureKind kind) {
    switch (kind) {
        case SensorFailureKind::timeout: return "timeout";
        case SensorFailureKind::rate_limited_empty: return "rate_limited_empty";
        case SensorFailureKind::malformed: return "malformed";
    }
    return "unrecognized";
}

struct SensorFailure {
    SensorFailureKind kind = SensorFailureKind::timeout;
    std::string detail;
    std::optional<int> fault_id;
};

template <typename T>
struct Fallible {
    std::optional<T> value;
    std::optional<SensorFailure> failure;

    bool ok() const { return value.has_value(); }

    static Fallible success(T v) {
        Fallible f;
        f.value = std::move(v);
        return f;
    }
    static Fallible fail(SensorFailure e) {
        Fallible f;
        f.failure = std::move(e);
        return f;
    }
};

/// One participant's raw sensor view at a serve-time request.
struct SensorSnapshot {
    /// Seconds per past participant-local decision time, oldest to newest,
    /// covering at most the trailing 14. Absent means the sensor was silent.
    std::vector<std::optional<double>> brushing;
    std::optional<int> app_opened_prior_day;
};

struct RewardQuery {
    std::string participant_id;
    std::vector<int> decision_indices;  // participant-local
};

/// Per participant, the brushing seconds observed at each queried decision
/// time, aligned with RewardQuery::decision_indices. Absent entries mean the
/// sensor never reported that session.
using RewardBatch = std::map<std::string, std::vector<std::optional<double>>>;

/// Boundary to the external sensor cloud. Every call counts against the
/// provider's per-minute rate limit, so callers batch where they can.
class SensorSource {
public:
    virtual ~SensorSource() = default;

    /// Serve-time window for one participant at local decision index t.
    virtual Fallible<SensorSnapshot> fetch_window(const std::string& participant_id, int t) = 0;

    /// Same data for many participants in a single request.
    virtual std::map<std::string, Fallible<SensorSnapshot>> fetch_window_batch(
        const std::vector<std::pair<std::string, int>>& requests) = 0;

    /// Update-time brushing outcomes, one request for the whole batch.
    virtual Fallible<RewardBatch> fetch_rewards(const std::vector<RewardQuery>& queries) = 0;
};

}  // namespace trialkit
