#include "trialkit/codec.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "trialkit/errors.hpp"

namespace trialkit {

namespace {

std::uint64_t bits_of(double x) {
  std::uint64_t b = 0;
  std::memcpy(&b, &x, sizeof(b));
  return b;
}

double double_of(std::uint64_t b) {
  double x = 0;
  std::memcpy(&x, &b, sizeof(x));
  return x;
}

char kind_char(StateKind kind) {
  switch (kind) {
    case StateKind::actual:
      return 'a';
    case StateKind::modified:
      return 'm';
    case StateKind::fixed:
      return 'f';
  }
  return '?';
}

StateKind kind_of_char(char c) {
  switch (c) {
    case 'a':
      return StateKind::actual;
    case 'm':
      return StateKind::modified;
    case 'f':
      return StateKind::fixed;
    default:
      throw InvalidInput("unknown schedule entry kind code");
  }
}

std::uint64_t parse_hex(const std::string& token) {
  if (token.empty()) throw InvalidInput("empty hex token in packed schedule");
  std::size_t pos = 0;
  std::uint64_t value = std::stoull(token, &pos, 16);
  if (pos != token.size()) throw InvalidInput("bad hex token in packed schedule");
  return value;
}

}  // namespace

nlohmann::json state_to_json(const StateVector& state) {
  return nlohmann::json::array({state.bias, state.time_of_day, state.b_bar,
                                state.a_bar, state.app_engagement});
}

StateVector state_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != kStateDim)
    throw InvalidInput("state payload must be an array of 5 numbers");
  StateVector s;
  s.bias = j[0].get<double>();
  s.time_of_day = j[1].get<double>();
  s.b_bar = j[2].get<double>();
  s.a_bar = j[3].get<double>();
  s.app_engagement = j[4].get<double>();
  s.validate();
  return s;
}

nlohmann::json moments_to_json(const Vec15& mu, const Mat15& sigma) {
  nlohmann::json jmu = nlohmann::json::array();
  for (int i = 0; i < kJointDim; ++i) jmu.push_back(mu(i));
  nlohmann::json jsigma = nlohmann::json::array();
  for (int r = 0; r < kJointDim; ++r)
    for (int c = 0; c < kJointDim; ++c) jsigma.push_back(sigma(r, c));
  return nlohmann::json{{"mu", jmu}, {"sigma", jsigma}};
}

void moments_from_json(const nlohmann::json& j, Vec15& mu, Mat15& sigma) {
  const auto& jmu = j.at("mu");
  const auto& jsigma = j.at("sigma");
  if (jmu.size() != static_cast<std::size_t>(kJointDim) ||
      jsigma.size() != static_cast<std::size_t>(kJointDim * kJointDim))
    throw InvalidInput("posterior moments payload has wrong dimensions");
  for (int i = 0; i < kJointDim; ++i) mu(i) = jmu[i].get<double>();
  for (int r = 0; r < kJointDim; ++r)
    for (int c = 0; c < kJointDim; ++c)
      sigma(r, c) = jsigma[r * kJointDim + c].get<double>();
}

std::string pack_entries(const std::vector<ScheduleEntry>& entries) {
  std::string out;
  out.reserve(entries.size() * 40);
  char buf[64];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof(buf), "%llx:%d:%llx:%c;",
                  static_cast<unsigned long long>(bits_of(e.pi)), e.action,
                  static_cast<unsigned long long>(e.seed),
                  kind_char(e.state_kind));
    out += buf;
  }
  return out;
}

std::vector<ScheduleEntry> unpack_entries(const std::string& packed,
                                          const std::string& policy_version) {
  std::vector<ScheduleEntry> entries;
  std::size_t start = 0;
  int offset = 0;
  while (start < packed.size()) {
    std::size_t end = packed.find(';', start);
    if (end == std::string::npos)
      throw InvalidInput("packed schedule missing entry terminator");
    std::string token = packed.substr(start, end - start);
    std::size_t c1 = token.find(':');
    std::size_t c2 = token.find(':', c1 + 1);
    std::size_t c3 = token.find(':', c2 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos ||
        c3 == std::string::npos || token.size() != c3 + 2)
      throw InvalidInput("malformed packed schedule entry");
    ScheduleEntry e;
    e.offset = offset++;
    e.pi = double_of(parse_hex(token.substr(0, c1)));
    e.action = std::stoi(token.substr(c1 + 1, c2 - c1 - 1));
    e.seed = parse_hex(token.substr(c2 + 1, c3 - c2 - 1));
    e.state_kind = kind_of_char(token[c3 + 1]);
    e.policy_version = policy_version;
    entries.push_back(e);
    start = end + 1;
  }
  return entries;
}

nlohmann::json schedule_entry_to_json(const ScheduleEntry& entry) {
  return nlohmann::json{{"offset", entry.offset},
                        {"pi", entry.pi},
                        {"action", entry.action},
                        {"seed", entry.seed},
                        {"policy_version", entry.policy_version},
                        {"state_kind", to_string(entry.state_kind)}};
}

}  // namespace trialkit
