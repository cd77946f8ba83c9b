#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace trialkit {

/// Caller violated a contract (non-finite state, probability outside [0,1], ...).
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A factorization or expectation could not be computed soundly. Callers map
/// this to the fallback path instead of regularizing silently.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Configuration file failed validation (unknown key, out-of-range value, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A required input was absent (e.g. prior-day app engagement missing from the
/// sensor window). Distinct from malformed input.
struct DataUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Store failures carry the id of the injected fault that caused them, when any,
// so alerts stay attributable in fault-injection runs.
struct StoreWriteError : std::runtime_error {
    explicit StoreWriteError(const std::string& what, std::optional<int> fault = std::nullopt)
        : std::runtime_error(what), fault_id(fault) {}
    std::optional<int> fault_id;
};

struct StoreReadError : std::runtime_error {
    explicit StoreReadError(const std::string& what, std::optional<int> fault = std::nullopt)
        : std::runtime_error(what), fault_id(fault) {}
    std::optional<int> fault_id;
};

}  // namespace trialkit
