#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trialkit/event_log.hpp"

namespace trialkit {

struct ReplayMismatch {
  std::uint64_t seq = 0;
  std::string field;
  std::string expected;
  std::string actual;
};

struct ReplayReport {
  std::size_t decisions_checked = 0;
  std::size_t schedules_checked = 0;
  std::size_t updates_seen = 0;
  std::vector<ReplayMismatch> mismatches;

  bool ok() const { return mismatches.empty(); }
};

/// Re-derives every logged schedule and decision from the genesis record's
/// config echo plus the logged posterior moments, and reports any point where
/// the log disagrees with the recomputation: seeds, probabilities, sampled
/// actions, full schedule contents, record ordering.
ReplayReport replay_log(const std::vector<EventRecord>& log);

}  // namespace trialkit
