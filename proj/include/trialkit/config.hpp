#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "trialkit/model.hpp"
#include "trialkit/policy.hpp"
#include "trialkit/state_reward.hpp"

namespace trialkit {

/// Weekly prompt-count guardrails, counted over 14 decision times.
struct Thresholds {
    int min_weekly = 1;
    int max_weekly = 12;

    void validate() const;
};

struct RateLimit {
    int max_per_minute = 120;

    void validate() const;
};

struct RetryPolicy {
    int max_attempts = 1;
    /// Prefetch sensor windows for all active participants in one request per
    /// decision step instead of one request per participant.
    bool batch = true;

    void validate() const;
};

struct ServiceConfig {
    PriorSpec prior;
    LogisticParams logistic;
    CostParams cost;
    int quad_nodes = 50;
    Thresholds thresholds;
    RateLimit rate_limit;
    RetryPolicy retry;
    std::uint64_t trial_seed = 0x5eedf00d;

    void validate() const;
    static ServiceConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Throws ConfigError when j holds a key outside `allowed`. `where` names the
/// enclosing object in the message.
void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                        const std::string& where);

/// Parse and validate a config file. IO and validation problems both surface
/// as ConfigError.
ServiceConfig load_service_config(const std::string& path);

}  // namespace trialkit
