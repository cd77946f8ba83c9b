#include "trialkit/event_log.hpp"

#include <algorithm>
#include <fstream>

#include "trialkit/errors.hpp"

namespace trialkit {

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::decision_point: return "decision_point";
        case EventKind::schedule_built: return "schedule_built";
        case EventKind::schedule_pushed: return "schedule_pushed";
        case EventKind::fallback_invoked: return "fallback_invoked";
        case EventKind::sensor_fetch: return "sensor_fetch";
        case EventKind::reward_constructed: return "reward_constructed";
        case EventKind::policy_update_succeeded: return "policy_update_succeeded";
        case EventKind::policy_update_skipped: return "policy_update_skipped";
        case EventKind::api_call: return "api_call";
        case EventKind::alert: return "alert";
        case EventKind::ledger: return "ledger";
    }
    throw InvalidInput("unknown event kind");
}

EventKind event_kind_from_string(const std::string& s) {
    static const std::map<std::string, EventKind> table = {
        {"decision_point", EventKind::decision_point},
        {"schedule_built", EventKind::schedule_built},
        {"schedule_pushed", EventKind::schedule_pushed},
        {"fallback_invoked", EventKind::fallback_invoked},
        {"sensor_fetch", EventKind::sensor_fetch},
        {"reward_constructed", EventKind::reward_constructed},
        {"policy_update_succeeded", EventKind::policy_update_succeeded},
        {"policy_update_skipped", EventKind::policy_update_skipped},
        {"api_call", EventKind::api_call},
        {"alert", EventKind::alert},
        {"ledger", EventKind::ledger},
    };
    auto it = table.find(s);
    if (it == table.end()) throw InvalidInput("unknown event kind: " + s);
    return it->second;
}

nlohmann::json to_json(const EventRecord& record) {
    return nlohmann::json{
        {"seq", record.seq},
        {"ts", record.ts},
        {"participant_id", record.participant_id},
        {"kind", to_string(record.kind)},
        {"payload", record.payload},
        {"policy_version", record.policy_version},
    };
}

EventRecord event_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidInput("event record must be a JSON object");
    static const std::vector<std::string> fields = {"seq",  "ts",      "participant_id",
                                                    "kind", "payload", "policy_version"};
    for (const auto& field : fields) {
        if (!j.contains(field)) throw InvalidInput("event record missing field: " + field);
    }
    for (const auto& [key, _] : j.items()) {
        if (std::find(fields.begin(), fields.end(), key) == fields.end()) {
            throw InvalidInput("event record has unknown field: " + key);
        }
    }
    EventRecord record;
    record.seq = j.at("seq").get<std::uint64_t>();
    record.ts = j.at("ts").get<std::int64_t>();
    record.participant_id = j.at("participant_id").get<std::string>();
    record.kind = event_kind_from_string(j.at("kind").get<std::string>());
    record.payload = j.at("payload");
    record.policy_version = j.at("policy_version").get<std::string>();
    return record;
}

std::uint64_t InMemoryEventStore::append(EventRecord record) {
    if (pending_write_fault_.has_value()) {
        const std::optional<int> fault_id = *pending_write_fault_;
        pending_write_fault_.reset();
        throw StoreWriteError("injected write failure", fault_id);
    }
    record.seq = records_.size() + 1;
    index_[{record.participant_id, static_cast<int>(record.kind)}].push_back(records_.size());
    records_.push_back(std::move(record));
    return records_.back().seq;
}

std::vector<EventRecord> InMemoryEventStore::read(const LogFilter& filter) const {
    if (pending_read_fault_.has_value()) {
        const std::optional<int> fault_id = *pending_read_fault_;
        pending_read_fault_.reset();
        throw StoreReadError("injected read failure", fault_id);
    }
    std::vector<EventRecord> out;
    if (filter.participant_id.has_value() && filter.kind.has_value()) {
        auto it = index_.find({*filter.participant_id, static_cast<int>(*filter.kind)});
        if (it != index_.end()) {
            for (std::size_t pos : it->second) {
                const EventRecord& record = records_[pos];
                if (record.seq >= filter.min_seq) out.push_back(record);
            }
        }
    } else {
        for (const EventRecord& record : records_) {
            if (record.seq < filter.min_seq) continue;
            if (filter.participant_id.has_value() && record.participant_id != *filter.participant_id)
                continue;
            if (filter.kind.has_value() && record.kind != *filter.kind) continue;
            out.push_back(record);
        }
    }
    if (filter.last_n.has_value() && out.size() > *filter.last_n) {
        out.erase(out.begin(), out.end() - static_cast<std::ptrdiff_t>(*filter.last_n));
    }
    return out;
}

void InMemoryEventStore::arm_write_failure(std::optional<int> fault_id) {
    pending_write_fault_ = fault_id;
}

void InMemoryEventStore::arm_read_failure(std::optional<int> fault_id) {
    pending_read_fault_ = fault_id;
}

void write_jsonl(const std::string& path, const std::vector<EventRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw StoreWriteError("cannot open for writing: " + path);
    for (const EventRecord& record : records) {
        out << to_json(record).dump() << '\n';
    }
    if (!out) throw StoreWriteError("write failed: " + path);
}

std::vector<EventRecord> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StoreReadError("cannot open for reading: " + path);
    std::vector<EventRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw StoreReadError("bad JSON at " + path + ":" + std::to_string(line_no) + ": " +
                                 e.what());
        }
        records.push_back(event_from_json(j));
    }
    return records;
}

}  // namespace trialkit
