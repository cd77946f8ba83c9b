#include "trialkit/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "trialkit/config.hpp"
#include "trialkit/errors.hpp"
#include "trialkit/event_log.hpp"
#include "trialkit/replay.hpp"
#include "trialkit/sim.hpp"

namespace trialkit::cli {

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << text << '\n';
}

int run_simulate(const std::string& config_path, const std::string& trial_path,
                 const std::string& faults_path, bool seed_set, std::uint64_t seed,
                 const std::string& out_dir) {
  ServiceConfig service_config = load_service_config(config_path);
  TrialConfig trial = load_trial_config(trial_path);
  if (seed_set) trial.seed = seed;
  FaultPlan plan;
  if (!faults_path.empty()) plan = load_fault_plan(faults_path);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + out_dir);
  const std::string out_log = (std::filesystem::path(out_dir) / "log.jsonl").string();
  const std::string out_ledger =
      (std::filesystem::path(out_dir) / "ledger.json").string();
  const std::string out_summary =
      (std::filesystem::path(out_dir) / "summary.json").string();

  TrialResult result = run_trial(trial, service_config, plan);
  write_jsonl(out_log, result.log);
  write_text(out_ledger, result.ledger.dump(2));
  write_text(out_summary, result.summary.dump(2));

  std::cout << "decision points: " << result.summary["decision_points"]
            << "\nalerts: red=" << result.red_alerts
            << " yellow=" << result.yellow_alerts << "\nlog: " << out_log
            << "\nledger: " << out_ledger << "\nsummary: " << out_summary << '\n';
  return result.red_alerts > 0 ? 2 : 0;
}

int run_replay(const std::string& log_path) {
  std::vector<EventRecord> records = read_jsonl(log_path);
  ReplayReport report = replay_log(records);
  std::cout << "decisions checked: " << report.decisions_checked
            << "\nschedules checked: " << report.schedules_checked
            << "\nupdates seen: " << report.updates_seen << '\n';
  if (!report.ok()) {
    const ReplayMismatch& first = report.mismatches.front();
    std::cout << "MISMATCH at seq " << first.seq << " field " << first.field
              << ": expected " << first.expected << ", logged " << first.actual
              << "\ntotal mismatches: " << report.mismatches.size() << '\n';
    return 3;
  }
  std::cout << "log verified\n";
  return 0;
}

// Everything the report prints is recomputed from the log; the optional ledger
// export only supplies the incident lists that never pass through the event store.
int run_report(const std::string& log_path, const std::string& ledger_path,
               const std::string& format) {
  std::vector<EventRecord> records = read_jsonl(log_path);

  std::map<std::string, std::size_t> kind_counts;
  std::map<std::string, std::size_t> alert_counts{{"red", 0}, {"yellow", 0}};
  std::map<std::string, std::size_t> ledger_counts;
  std::set<std::string> participants;
  std::size_t decisions = 0;
  std::size_t prompts = 0;
  std::size_t updates = 0;
  std::size_t skipped = 0;

  struct Track {
    std::vector<int> actions;  // indexed by local decision time
    std::vector<double> pis;
  };
  std::map<std::string, Track> tracks;
  std::vector<double> pi_week_sum;
  std::vector<std::size_t> pi_week_n;
  double pi_sum = 0.0, pi_min = 1.0, pi_max = 0.0;
  nlohmann::json breaches = nlohmann::json::array();
  nlohmann::json alert_timeline = nlohmann::json::array();
  nlohmann::json update_timeline = nlohmann::json::array();
  nlohmann::json log_blanks = nlohmann::json::array();
  nlohmann::json log_api_failures = nlohmann::json::array();

  for (const auto& record : records) {
    ++kind_counts[to_string(record.kind)];
    if (!record.participant_id.empty()) participants.insert(record.participant_id);
    switch (record.kind) {
      case EventKind::decision_point: {
        ++decisions;
        const int action = record.payload.value("action", 0);
        prompts += static_cast<std::size_t>(action);
        const double pi = record.payload.value("pi", 0.0);
        const auto local_t =
            static_cast<std::size_t>(record.payload.value("local_t", 0));
        auto& track = tracks[record.participant_id];
        if (track.actions.size() <= local_t) {
          track.actions.resize(local_t + 1, 0);
          track.pis.resize(local_t + 1, 0.0);
        }
        track.actions[local_t] = action;
        track.pis[local_t] = pi;
        const std::size_t week = local_t / 14;
        if (pi_week_sum.size() <= week) {
          pi_week_sum.resize(week + 1, 0.0);
          pi_week_n.resize(week + 1, 0);
        }
        pi_week_sum[week] += pi;
        ++pi_week_n[week];
        pi_sum += pi;
        pi_min = std::min(pi_min, pi);
        pi_max = std::max(pi_max, pi);
        break;
      }
      case EventKind::alert: {
        const std::string severity = record.payload.value("severity", "red");
        ++alert_counts[severity];
        nlohmann::json item{{"ts", record.ts},
                            {"severity", severity},
                            {"check_id", record.payload.value("check_id", "")}};
        if (!record.participant_id.empty())
          item["participant"] = record.participant_id;
        alert_timeline.push_back(item);
        if (record.payload.value("check_id", "") == "prompt_count") {
          const auto& detail = record.payload.at("detail");
          breaches.push_back({{"participant", record.participant_id},
                              {"ts", record.ts},
                              {"side", detail.value("side", "")},
                              {"count", detail.value("count", 0)},
                              {"min_weekly", detail.value("min_weekly", 0)},
                              {"max_weekly", detail.value("max_weekly", 0)}});
        }
        break;
      }
      case EventKind::ledger: {
        const std::string category = record.payload.value("category", "other");
        ++ledger_counts[category];
        if (category == "blank_schedule")
          log_blanks.push_back({{"category", category},
                                {"ts", record.ts},
                                {"payload", record.payload.value(
                                                "payload", nlohmann::json::object())}});
        if (category == "api_call_failed")
          log_api_failures.push_back(
              {{"category", category},
               {"ts", record.ts},
               {"payload",
                record.payload.value("payload", nlohmann::json::object())}});
        break;
      }
      case EventKind::policy_update_succeeded:
        if (!record.payload.value("genesis", false)) {
          ++updates;
          update_timeline.push_back(
              {{"ts", record.ts},
               {"event", "adopted"},
               {"version", record.payload.value("version", "")},
               {"trained_on", record.payload.value("trained_on", 0)},
               {"new_tuples", record.payload.value("new_tuples", 0)}});
        }
        break;
      case EventKind::policy_update_skipped:
        ++skipped;
        update_timeline.push_back(
            {{"ts", record.ts},
             {"event", "skipped"},
             {"reason", record.payload.value("reason", "")},
             {"retained_version", record.payload.value("retained_version", "")}});
        break;
      default:
        break;
    }
  }

  nlohmann::json prompt_counts = nlohmann::json::object();
  for (const auto& [pid, track] : tracks) {
    std::vector<int> weekly;
    for (std::size_t i = 0; i < track.actions.size(); i += 14) {
      const std::size_t end = std::min(i + 14, track.actions.size());
      weekly.push_back(std::accumulate(track.actions.begin() + i,
                                       track.actions.begin() + end, 0));
    }
    prompt_counts[pid] = weekly;
  }

  nlohmann::json pi_weekly = nlohmann::json::array();
  for (std::size_t w = 0; w < pi_week_sum.size(); ++w)
    pi_weekly.push_back(pi_week_n[w] ? pi_week_sum[w] / pi_week_n[w] : 0.0);
  nlohmann::json pi_overall{{"mean", decisions ? pi_sum / decisions : 0.0},
                            {"min", decisions ? pi_min : 0.0},
                            {"max", decisions ? pi_max : 0.0}};

  nlohmann::json incidents{{"blank_schedule", log_blanks},
                           {"api_call_failed", log_api_failures}};
  if (!ledger_path.empty()) {
    std::ifstream in(ledger_path);
    if (!in) throw ConfigError("cannot read ledger: " + ledger_path);
    nlohmann::json exported = nlohmann::json::parse(in);
    if (exported.contains("incidents")) incidents = exported["incidents"];
  }

  nlohmann::json summary{{"records", records.size()},
                         {"participants", participants.size()},
                         {"decision_points", decisions},
                         {"prompts_scheduled", prompts},
                         {"updates", {{"succeeded", updates}, {"skipped", skipped}}},
                         {"alerts", alert_counts},
                         {"ledger", ledger_counts},
                         {"kinds", kind_counts},
                         {"prompt_counts", prompt_counts},
                         {"prompt_count_breaches", breaches},
                         {"pi_weekly_mean", pi_weekly},
                         {"pi_overall", pi_overall},
                         {"alert_timeline", alert_timeline},
                         {"update_timeline", update_timeline},
                         {"incidents", incidents}};
  if (format == "json") {
    std::cout << summary.dump(2) << '\n';
    return 0;
  }

  std::cout << "records: " << records.size() << '\n'
            << "participants: " << participants.size() << '\n'
            << "decision points: " << decisions << " (prompts scheduled: " << prompts
            << ")\n"
            << "updates: " << updates << " succeeded, " << skipped << " skipped\n"
            << "alerts: red=" << alert_counts["red"]
            << " yellow=" << alert_counts["yellow"] << '\n';
  for (const auto& [category, count] : ledger_counts)
    std::cout << "ledger " << category << ": " << count << '\n';

  char buf[32];
  std::cout << "pi overall: mean=" << pi_overall["mean"].get<double>()
            << " min=" << pi_overall["min"].get<double>()
            << " max=" << pi_overall["max"].get<double>() << "\npi weekly mean:";
  for (const auto& v : pi_weekly) {
    std::snprintf(buf, sizeof buf, " %.3f", v.get<double>());
    std::cout << buf;
  }
  std::cout << "\nweekly prompt counts per participant:\n";
  for (const auto& [pid, weekly] : prompt_counts.items()) {
    std::cout << "  " << pid << ":";
    for (const auto& c : weekly) std::cout << ' ' << c.get<int>();
    std::cout << '\n';
  }
  if (breaches.empty()) {
    std::cout << "prompt count breaches: none\n";
  } else {
    std::cout << "prompt count breaches:\n";
    for (const auto& b : breaches)
      std::cout << "  ts=" << b["ts"] << " " << b["participant"].get<std::string>()
                << " " << b["side"].get<std::string>() << " count=" << b["count"]
                << " allowed=[" << b["min_weekly"] << "," << b["max_weekly"]
                << "]\n";
  }
  std::cout << "update timeline:\n";
  for (const auto& u : update_timeline) {
    if (u["event"] == "adopted")
      std::cout << "  ts=" << u["ts"] << " adopted "
                << u["version"].get<std::string>()
                << " (trained_on=" << u["trained_on"]
                << ", new=" << u["new_tuples"] << ")\n";
    else
      std::cout << "  ts=" << u["ts"] << " skipped ("
                << u["reason"].get<std::string>() << ") retained "
                << u["retained_version"].get<std::string>() << '\n';
  }
  if (alert_timeline.empty()) {
    std::cout << "alert timeline: none\n";
  } else {
    std::cout << "alert timeline:\n";
    std::size_t shown = 0;
    for (const auto& a : alert_timeline) {
      if (shown == 20) {
        std::cout << "  ... " << alert_timeline.size() - shown << " more\n";
        break;
      }
      std::cout << "  ts=" << a["ts"] << " " << a["severity"].get<std::string>()
                << " " << a["check_id"].get<std::string>();
      if (a.contains("participant"))
        std::cout << " " << a["participant"].get<std::string>();
      std::cout << '\n';
      ++shown;
    }
  }
  const auto& blanks = incidents["blank_schedule"];
  const auto& api_failures = incidents["api_call_failed"];
  if (blanks.empty() && api_failures.empty()) {
    std::cout << "incidents: none\n";
  } else {
    std::cout << "incidents:\n";
    for (const auto& entry : blanks) {
      std::cout << "  blank_schedule at decision time "
                << entry["payload"].value("decision_time", entry.value("ts", 0L));
      if (entry["payload"].contains("participants"))
        std::cout << " participants=" << entry["payload"]["participants"].dump();
      if (entry["payload"].contains("fault_id"))
        std::cout << " fault_id=" << entry["payload"]["fault_id"];
      std::cout << '\n';
    }
    for (const auto& entry : api_failures)
      std::cout << "  api_call_failed ts=" << entry.value("ts", 0L) << " "
                << entry["payload"].value("detail", std::string{}) << '\n';
  }
  return 0;
}

int run_validate(const std::string& config_path, const std::string& trial_path,
                 const std::string& faults_path) {
  load_service_config(config_path);
  std::cout << "service config ok: " << config_path << '\n';
  if (!trial_path.empty()) {
    load_trial_config(trial_path);
    std::cout << "trial config ok: " << trial_path << '\n';
  }
  if (!faults_path.empty()) {
    load_fault_plan(faults_path);
    std::cout << "fault plan ok: " << faults_path << '\n';
  }
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Decision service trial harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string trial_path;
  std::string faults_path;
  std::string log_path;
  std::string ledger_path;
  std::string out_dir = ".";
  std::string format = "text";
  std::uint64_t seed = 0;

  auto* simulate = app.add_subcommand("simulate", "Run a simulated trial");
  simulate->add_option("--config", config_path, "Service config JSON")->required();
  simulate->add_option("--trial", trial_path, "Trial config JSON")->required();
  simulate->add_option("--faults", faults_path, "Fault plan JSON");
  auto* seed_opt = simulate->add_option("--seed", seed, "Override the simulation seed");
  simulate->add_option("--out", out_dir,
                       "Output directory for log.jsonl, ledger.json, summary.json");

  auto* replay = app.add_subcommand("replay", "Verify a captured event log");
  replay->add_option("--log", log_path, "Event log (JSONL)")->required();

  auto* report = app.add_subcommand("report", "Summarize a captured event log");
  report->add_option("--log", log_path, "Event log (JSONL)")->required();
  report->add_option("--ledger", ledger_path, "Ledger export from the same run");
  report->add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"text", "json"}));

  auto* validate = app.add_subcommand("validate", "Validate config files");
  validate->add_option("--config", config_path, "Service config JSON")->required();
  validate->add_option("--trial", trial_path, "Trial config JSON");
  validate->add_option("--faults", faults_path, "Fault plan JSON");

  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("trialctl");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& a : full) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed())
      return run_simulate(config_path, trial_path, faults_path,
                          seed_opt->count() > 0, seed, out_dir);
    if (replay->parsed()) return run_replay(log_path);
    if (report->parsed()) return run_report(log_path, ledger_path, format);
    if (validate->parsed()) return run_validate(config_path, trial_path, faults_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace trialkit::cli
