// Acceptance gate. Each criterion prints one line; the binary exits nonzero
// if any of them fail. Criteria that inspect a full simulated trial share
// the same run so the whole gate stays well under its timeout.

#include <trialkit/codec.hpp>
#include <trialkit/config.hpp>
#include <trialkit/event_log.hpp>
#include <trialkit/model.hpp>
#include <trialkit/monitoring.hpp>
#include <trialkit/policy.hpp>
#include <trialkit/replay.hpp>
#include <trialkit/rng.hpp>
#include <trialkit/schedule.hpp>
#include <trialkit/sensor.hpp>
#include <trialkit/service.hpp>
#include <trialkit/sim.hpp>
#include <trialkit/state_reward.hpp>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace trialkit;

namespace {

std::string data_path(const char* name) {
  return std::string(TESTDATA_DIR "/") + name;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

StateVector random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  StateVector s;
  s.bias = 1.0;
  s.time_of_day = (rng() & 1) ? 1.0 : 0.0;
  s.b_bar = unit(rng);
  s.a_bar = unit(rng);
  s.app_engagement = (rng() & 1) ? 1.0 : 0.0;
  return s;
}

Mat5 random_spd5(std::mt19937_64& rng, double jitter) {
  std::normal_distribution<double> gauss(0.0, 0.6);
  Mat5 a;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) a(i, j) = gauss(rng);
  Mat5 s = a * a.transpose();
  s += jitter * Mat5::Identity();
  return s;
}

// The clean default deployment, executed once and shared.
struct CleanRun {
  TrialConfig trial;
  ServiceConfig service;
  TrialResult result;
  double run_seconds = 0.0;
};

const CleanRun& clean_run() {
  static const CleanRun run = [] {
    CleanRun r;
    r.trial = load_trial_config(data_path("default_trial.json"));
    r.service = load_service_config(data_path("default_service.json"));
    auto t0 = Clock::now();
    r.result = run_trial(r.trial, r.service);
    r.run_seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

// The same deployment under the shipped fault plan, which covers every
// catalogued fault kind at least once.
struct FaultedRun {
  FaultPlan plan;
  TrialResult result;
};

const FaultedRun& faulted_run() {
  static const FaultedRun run = [] {
    FaultedRun r;
    auto trial = load_trial_config(data_path("default_trial.json"));
    auto service = load_service_config(data_path("default_service.json"));
    r.plan = load_fault_plan(data_path("example_faults.json"));
    r.result = run_trial(trial, service, r.plan);
    return r;
  }();
  return run;
}

// 1. Conjugate refit against an independent dense normal-equations solve.
bool criterion1(std::string& note) {
  auto t0 = Clock::now();
  std::mt19937_64 rng(0x51c751);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    PriorSpec prior;
    for (int i = 0; i < 5; ++i) {
      prior.mu_alpha0(i) = 2.0 * gauss(rng);
      prior.mu_alpha1(i) = 2.0 * gauss(rng);
      prior.mu_beta(i) = 2.0 * gauss(rng);
    }
    prior.sigma_alpha0 = random_spd5(rng, 0.4);
    prior.sigma_alpha1 = random_spd5(rng, 0.4);
    prior.sigma_beta = random_spd5(rng, 0.4);
    prior.noise_var = 0.25 + 4.0 * unit(rng);
    prior.validate();

    int n = 1 + static_cast<int>(rng() % 20);
    std::vector<TrainingTuple> batch;
    std::vector<Vec15> rows;
    std::vector<double> ys;
    for (int i = 0; i < n; ++i) {
      TrainingTuple t;
      t.participant_id = "p";
      t.decision_index = i;
      t.state = random_state(rng);
      t.pi = 0.05 + 0.9 * unit(rng);
      t.action = unit(rng) < t.pi ? 1 : 0;
      t.reward = 10.0 * gauss(rng);
      batch.push_back(t);
      Vec5 f = t.state.to_vector();
      Vec15 phi;
      phi << f, t.pi * f, (t.action - t.pi) * f;
      rows.push_back(phi);
      ys.push_back(t.reward);
    }

    PosteriorState got = posterior_update(prior, batch, rep);

    Mat15 prec = prior.stacked_cov().inverse();
    Vec15 lin = prec * prior.stacked_mean();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      prec += rows[i] * rows[i].transpose() / prior.noise_var;
      lin += rows[i] * ys[i] / prior.noise_var;
    }
    Mat15 sigma = prec.inverse();
    Vec15 mu = sigma * lin;

    worst = std::max(worst, (got.mu - mu).cwiseAbs().maxCoeff());
    worst = std::max(worst, (got.sigma - sigma).cwiseAbs().maxCoeff());
  }
  double dt = seconds_since(t0);
  note = fmt("50 batches, max moment gap %.2e, %.2fs", worst, dt);
  return worst <= 1e-10 && dt < 5.0;
}

// 2. Quadrature selection probabilities against seeded Monte Carlo.
bool criterion2(std::string& note) {
  auto t0 = Clock::now();
  std::mt19937_64 rng(0x9d2c);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.2);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    StateVector s = random_state(rng);
    BetaMarginal beta;
    for (int i = 0; i < 5; ++i) beta.mu(i) = gauss(rng);
    beta.sigma = random_spd5(rng, 0.1);
    LogisticParams p;
    p.l_min = 0.1 + 0.2 * unit(rng);
    p.l_max = 0.7 + 0.2 * unit(rng);
    p.steepness_b = 0.5 + 1.5 * unit(rng);
    p.offset_c = 0.5 + 1.5 * unit(rng);
    p.shape_k = 0.5 + 1.5 * unit(rng);
    p.validate();

    double quad = action_selection_prob(s, beta, p, 50);
    double mc = mc_action_selection_prob(s, beta, p, 1000000, rng());
    worst = std::max(worst, std::abs(quad - mc));
  }
  double dt = seconds_since(t0);
  note = fmt("100 draws, max |quad - mc| %.2e, %.1fs", worst, dt);
  return worst <= 3e-3 && dt < 60.0;
}

// 3. Every schedule formed during the clean run keeps its interior
// probabilities inside the clip range and its tail at exactly 0.5.
bool criterion3(std::string& note) {
  const CleanRun& run = clean_run();
  const LogisticParams& lp = run.service.logistic;
  std::size_t built = 0;
  std::size_t checked = 0;
  for (const auto& r : run.result.log) {
    if (r.kind != EventKind::schedule_built) continue;
    ++built;
    auto entries =
        unpack_entries(r.payload.at("entries").get<std::string>(), r.policy_version);
    if (entries.size() != kScheduleLength) {
      note = fmt("schedule at seq %llu has %zu entries",
                 static_cast<unsigned long long>(r.seq), entries.size());
      return false;
    }
    for (const auto& e : entries) {
      ++checked;
      bool ok = true;
      if (e.offset < kActualOffsets) {
        ok = e.state_kind == StateKind::actual && e.pi >= lp.l_min && e.pi <= lp.l_max;
      } else if (e.offset < kModifiedOffsetEnd) {
        ok = e.state_kind == StateKind::modified && e.pi >= lp.l_min && e.pi <= lp.l_max;
      } else {
        ok = e.state_kind == StateKind::fixed && e.pi == 0.5;
      }
      if (!ok) {
        note = fmt("entry offset %d pi %.17g kind %s at seq %llu", e.offset, e.pi,
                   to_string(e.state_kind), static_cast<unsigned long long>(r.seq));
        return false;
      }
    }
  }
  note = fmt("%zu schedules, %zu entries checked", built, checked);
  return built == 9800 && checked == built * kScheduleLength;
}

// 4. Under the all-kinds fault plan every decision still comes with a
// complete schedule and every fallback decision is uniform.
bool criterion4(std::string& note) {
  const FaultedRun& run = faulted_run();
  std::map<std::pair<std::string, std::int64_t>, int> pushes;
  std::size_t decisions = 0;
  std::size_t fallbacks = 0;
  std::size_t unhandled = 0;
  for (const auto& r : run.result.log) {
    if (r.kind == EventKind::schedule_pushed) {
      if (r.payload.at("length").get<int>() != kScheduleLength) {
        note = fmt("push at seq %llu not full length",
                   static_cast<unsigned long long>(r.seq));
        return false;
      }
      ++pushes[{r.participant_id, r.ts}];
    } else if (r.kind == EventKind::alert &&
               r.payload.at("check_id").get<std::string>() == "unhandled_exception") {
      ++unhandled;
    }
  }
  for (const auto& r : run.result.log) {
    if (r.kind != EventKind::decision_point) continue;
    ++decisions;
    if (pushes.find({r.participant_id, r.ts}) == pushes.end()) {
      note = fmt("decision at seq %llu has no pushed schedule",
                 static_cast<unsigned long long>(r.seq));
      return false;
    }
    if (r.payload.value("fallback", false)) {
      ++fallbacks;
      if (r.payload.at("pi").get<double>() != 0.5 ||
          r.payload.at("state_kind").get<std::string>() != "fixed") {
        note = fmt("fallback decision at seq %llu not uniform",
                   static_cast<unsigned long long>(r.seq));
        return false;
      }
    }
  }
  note = fmt("%zu decisions, %zu fallbacks, %zu unhandled errors", decisions,
             fallbacks, unhandled);
  return decisions == 9800 && fallbacks > 0 && unhandled == 0;
}

// 5. Each injected fault is attributable to exactly one alert or ledger
// record of the mandated severity, and nothing else claims a fault id.
bool criterion5(std::string& note) {
  const FaultedRun& run = faulted_run();

  struct Attribution {
    std::string check;
    std::string severity;
  };
  std::map<int, std::vector<Attribution>> seen;

  for (const auto& r : run.result.log) {
    if (r.kind == EventKind::alert) {
      const auto& p = r.payload;
      std::string check = p.at("check_id").get<std::string>();
      std::string severity = p.at("severity").get<std::string>();
      if (p.at("detail").contains("fault_id")) {
        seen[p.at("detail").at("fault_id").get<int>()].push_back({check, severity});
      } else if (r.participant_id.rfind("unregistered-", 0) == 0) {
        int id = std::stoi(r.participant_id.substr(std::strlen("unregistered-")));
        seen[id].push_back({check, severity});
      }
    } else if (r.kind == EventKind::policy_update_skipped &&
               r.payload.contains("fault_id")) {
      seen[r.payload.at("fault_id").get<int>()].push_back({"update_skip", "green"});
    }
  }
  for (const auto& incident :
       run.result.ledger.at("incidents").at("blank_schedule")) {
    seen[incident.at("payload").at("fault_id").get<int>()].push_back(
        {"blank_schedule", "green"});
  }

  std::set<FaultKind> kinds_covered;
  std::size_t attributed = 0;
  for (const auto& [id, records] : seen) attributed += records.size();

  for (const auto& f : run.plan.faults) {
    kinds_covered.insert(f.kind);
    Attribution want;
    switch (f.kind) {
      case FaultKind::sensor_timeout:
        want = {"sensor_timeout", "yellow"};
        break;
      case FaultKind::rate_limited_empty:
        want = {"sensor_empty_unparseable", "yellow"};
        break;
      case FaultKind::malformed_payload:
        want = f.target == "update" ? Attribution{"update_skip", "green"}
                                    : Attribution{"sensor_malformed", "yellow"};
        break;
      case FaultKind::store_write_fail:
        want = {"store_write_failed", "red"};
        break;
      case FaultKind::store_read_fail:
        want = {"store_read_failed", "yellow"};
        break;
      case FaultKind::controller_timeout_blank_schedule:
        want = {"blank_schedule", "green"};
        break;
      case FaultKind::unknown_participant_call:
        want = {"unknown_participant", "red"};
        break;
    }
    auto it = seen.find(f.id);
    if (it == seen.end() || it->second.size() != 1) {
      note = fmt("fault %d attributed %zu times", f.id,
                 it == seen.end() ? std::size_t{0} : it->second.size());
      return false;
    }
    if (it->second[0].check != want.check || it->second[0].severity != want.severity) {
      note = fmt("fault %d landed as %s/%s, wanted %s/%s", f.id,
                 it->second[0].check.c_str(), it->second[0].severity.c_str(),
                 want.check.c_str(), want.severity.c_str());
      return false;
    }
  }

  const auto& faults = run.result.summary.at("faults");
  bool counters_ok = faults.at("planned").get<std::size_t>() == run.plan.faults.size() &&
                     faults.at("fired").get<std::size_t>() == run.plan.faults.size();
  note = fmt("%zu faults planned, %zu attributed records, %zu kinds",
             run.plan.faults.size(), attributed, kinds_covered.size());
  return attributed == run.plan.faults.size() && kinds_covered.size() == 7 &&
         counters_ok;
}

// 6. A malformed reward batch must leave the posterior moments bit for bit
// unchanged and be documented as a skipped update.
bool criterion6(std::string& note) {
  struct MalformedRewardCloud : SensorSource {
    Fallible<SensorSnapshot> fetch_window(const std::string&, int) override {
      SensorSnapshot snap;
      snap.brushing = {120.0, 95.0, 140.0};
      snap.app_opened_prior_day = 1;
      return Fallible<SensorSnapshot>::success(snap);
    }
    std::map<std::string, Fallible<SensorSnapshot>> fetch_window_batch(
        const std::vector<std::pair<std::string, int>>& requests) override {
      std::map<std::string, Fallible<SensorSnapshot>> out;
      for (const auto& [pid, t] : requests) out[pid] = fetch_window(pid, t);
      return out;
    }
    Fallible<RewardBatch> fetch_rewards(const std::vector<RewardQuery>&) override {
      return Fallible<RewardBatch>::fail(
          {SensorFailureKind::malformed, "unparseable body", std::nullopt});
    }
  };

  ServiceConfig cfg;
  InMemoryEventStore store;
  MalformedRewardCloud sensors;
  MemorySink sink;
  RlService service(cfg, store, sensors, sink);
  service.register_participant("p001", 0);
  for (std::int64_t step = 0; step < 4; ++step)
    service.serve_action_selection("p001", step);

  auto before = service.posterior_snapshot();
  PosteriorState after = service.run_weekly_update(13);

  bool moments_same =
      std::memcmp(before->mu.data(), after.mu.data(), 15 * sizeof(double)) == 0 &&
      std::memcmp(before->sigma.data(), after.sigma.data(),
                  225 * sizeof(double)) == 0 &&
      before->update_index == after.update_index &&
      before->version_id == after.version_id;

  std::size_t skips = 0;
  std::size_t adoptions = 0;
  for (const auto& r : store.records()) {
    if (r.kind == EventKind::policy_update_skipped) {
      ++skips;
      if (r.payload.at("reason").get<std::string>() != "malformed") {
        note = "skip recorded with wrong reason";
        return false;
      }
    } else if (r.kind == EventKind::policy_update_succeeded &&
               !r.payload.value("genesis", false)) {
      ++adoptions;
    }
  }
  note = fmt("moments %s, %zu skip records, %zu adoptions",
             moments_same ? "identical" : "CHANGED", skips, adoptions);
  return moments_same && skips == 1 && adoptions == 0;
}

// 7. Replay reproduces the whole clean log, and flipping any single logged
// seed is caught at that record.
bool criterion7(std::string& note) {
  const CleanRun& run = clean_run();
  ReplayReport report = replay_log(run.result.log);
  if (!report.ok() || report.decisions_checked != 9800) {
    note = fmt("clean replay: %zu mismatches, %zu decisions",
               report.mismatches.size(), report.decisions_checked);
    return false;
  }

  std::vector<std::size_t> decision_idx;
  for (std::size_t i = 0; i < run.result.log.size(); ++i)
    if (run.result.log[i].kind == EventKind::decision_point) decision_idx.push_back(i);

  std::size_t n = decision_idx.size();
  std::size_t picks[] = {0, n / 4, n / 2, 3 * n / 4, n - 1};
  int caught = 0;
  for (std::size_t pick : picks) {
    std::vector<EventRecord> tampered = run.result.log;
    EventRecord& victim = tampered[decision_idx[pick]];
    victim.payload["seed"] = victim.payload.at("seed").get<std::uint64_t>() ^ 1u;
    ReplayReport bad = replay_log(tampered);
    bool hit = false;
    for (const auto& m : bad.mismatches)
      if (m.seq == victim.seq) hit = true;
    if (!bad.ok() && hit) ++caught;
  }
  note = fmt("9800 decisions replayed, %d/5 seed flips caught", caught);
  return caught == 5;
}

// 8. Shape of the default deployment: wave enrollment, a full decision grid
// per participant, updates on Sundays only, finished inside a minute.
bool criterion8(std::string& note) {
  const CleanRun& run = clean_run();

  std::map<std::string, std::int64_t> registered;
  std::map<std::string, int> decisions;
  std::size_t triggers = 0;
  std::size_t adoptions = 0;
  for (const auto& r : run.result.log) {
    if (r.kind == EventKind::api_call) {
      std::string endpoint = r.payload.at("endpoint").get<std::string>();
      if (endpoint == "register") {
        registered[r.participant_id] = r.ts;
      } else if (endpoint == "update_trigger") {
        ++triggers;
        std::int64_t step = r.payload.at("step").get<std::int64_t>();
        std::int64_t day = step / 2;
        if (step % 2 != 1 || day % 7 != 6) {
          note = fmt("update trigger at step %lld", static_cast<long long>(step));
          return false;
        }
      }
    } else if (r.kind == EventKind::decision_point) {
      ++decisions[r.participant_id];
    } else if (r.kind == EventKind::policy_update_succeeded &&
               !r.payload.value("genesis", false)) {
      ++adoptions;
    }
  }

  if (registered.size() != 70) {
    note = fmt("%zu participants registered", registered.size());
    return false;
  }
  for (int i = 0; i < 70; ++i) {
    std::string pid = fmt("p%03d", i + 1);
    std::int64_t want_ts = static_cast<std::int64_t>(i / 5) * 14 * 2;
    auto it = registered.find(pid);
    if (it == registered.end() || it->second != want_ts) {
      note = fmt("%s enrolled at the wrong step", pid.c_str());
      return false;
    }
    if (decisions[pid] != 140) {
      note = fmt("%s has %d decisions", pid.c_str(), decisions[pid]);
      return false;
    }
  }
  note = fmt("70 participants, 140 decisions each, %zu Sunday updates, %.1fs",
             adoptions, run.run_seconds);
  return triggers == 36 && adoptions == 36 && run.run_seconds < 60.0;
}

// 9. Cost and reward arithmetic: zero cost without a prompt, reward exactly
// quality minus cost, threshold indicators strict.
bool criterion9(std::string& note) {
  const CleanRun& run = clean_run();
  const CostParams& cp = run.service.cost;

  StateVector s;
  s.b_bar = cp.brush_threshold_b;
  s.a_bar = cp.dosage_threshold_a1;
  if (compute_cost(s, 1, cp) != 0.0) {
    note = "cost charged at exact thresholds";
    return false;
  }
  s.b_bar = std::nextafter(cp.brush_threshold_b, 1.0);
  s.a_bar = std::nextafter(cp.dosage_threshold_a1, 1.0);
  if (compute_cost(s, 1, cp) != cp.xi1) {
    note = "xi1 term wrong just above thresholds";
    return false;
  }
  s.a_bar = std::nextafter(cp.dosage_threshold_a2, 1.0);
  if (compute_cost(s, 1, cp) != cp.xi1 + cp.xi2) {
    note = "xi2 term wrong just above the heavy-dosage threshold";
    return false;
  }
  s.a_bar = cp.dosage_threshold_a2;
  if (compute_cost(s, 1, cp) != cp.xi1) {
    note = "xi2 charged at its exact threshold";
    return false;
  }

  std::mt19937_64 rng(0xc057);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    StateVector st = random_state(rng);
    int action = static_cast<int>(rng() & 1);
    double q = 180.0 * unit(rng);
    double cost = compute_cost(st, action, cp);
    double want = 0.0;
    if (action == 1) {
      if (st.b_bar > cp.brush_threshold_b && st.a_bar > cp.dosage_threshold_a1)
        want += cp.xi1;
      if (st.a_bar > cp.dosage_threshold_a2) want += cp.xi2;
    }
    RewardRecord rr = compute_reward(q, cost);
    if (cost != want || rr.reward != q - cost || rr.q != q || rr.cost != cost) {
      note = fmt("identity broken at sweep %d", i);
      return false;
    }
  }

  std::size_t complete = 0;
  for (const auto& r : run.result.log) {
    if (r.kind != EventKind::reward_constructed) continue;
    if (!r.payload.at("complete").get<bool>()) continue;
    ++complete;
    double q = r.payload.at("q").get<double>();
    double cost = r.payload.at("cost").get<double>();
    double reward = r.payload.at("reward").get<double>();
    int action = r.payload.at("action").get<int>();
    if (reward != q - cost || q != truncate_quality(r.payload.at("q_raw").get<double>())) {
      note = fmt("logged reward identity broken at seq %llu",
                 static_cast<unsigned long long>(r.seq));
      return false;
    }
    if (action == 0 && cost != 0.0) {
      note = fmt("cost charged without a prompt at seq %llu",
                 static_cast<unsigned long long>(r.seq));
      return false;
    }
    StateVector st = state_from_json(r.payload.at("state"));
    if (cost != compute_cost(st, action, cp)) {
      note = fmt("logged cost inconsistent at seq %llu",
                 static_cast<unsigned long long>(r.seq));
      return false;
    }
  }
  note = fmt("20000 random sweeps, %zu logged rewards checked", complete);
  return complete > 0;
}

// 10. With a population that responds to prompts while engaged, the served
// probabilities in that region must drift upward over the trial.
bool criterion10(std::string& note) {
  auto trial = load_trial_config(data_path("responsive_trial.json"));
  auto service = load_service_config(data_path("default_service.json"));

  int wins = 0;
  for (std::uint64_t seed = 1001; seed <= 1010; ++seed) {
    trial.seed = seed;
    TrialResult result = run_trial(trial, service);
    double early_sum = 0.0, late_sum = 0.0;
    int early_n = 0, late_n = 0;
    for (const auto& r : result.log) {
      if (r.kind != EventKind::decision_point) continue;
      if (r.payload.value("fallback", false)) continue;
      if (r.payload.at("state").at(4).get<double>() != 1.0) continue;
      double pi = r.payload.at("pi").get<double>();
      int local_t = r.payload.at("local_t").get<int>();
      if (local_t < 28) {
        early_sum += pi;
        ++early_n;
      } else if (local_t >= 112) {
        late_sum += pi;
        ++late_n;
      }
    }
    if (early_n == 0 || late_n == 0) {
      note = fmt("seed %llu produced an empty window",
                 static_cast<unsigned long long>(seed));
      return false;
    }
    if (late_sum / late_n > early_sum / early_n) ++wins;
  }
  note = fmt("engaged-region mean rose in %d/10 seeds", wins);
  return wins >= 9;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* what;
    bool (*fn)(std::string&);
  };
  const Criterion table[] = {
      {1, "posterior refit matches dense normal equations", criterion1},
      {2, "quadrature probabilities match Monte Carlo", criterion2},
      {3, "schedules stay clipped with an exact 0.5 tail", criterion3},
      {4, "every faulted decision still gets a full schedule", criterion4},
      {5, "each injected fault maps to one attributable record", criterion5},
      {6, "malformed update batch leaves moments bit-identical", criterion6},
      {7, "replay reproduces the log and catches seed flips", criterion7},
      {8, "default run shape and runtime budget", criterion8},
      {9, "cost and reward identities are exact", criterion9},
      {10, "responsive region probabilities drift upward", criterion10},
  };

  int failures = 0;
  for (const auto& c : table) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", c.id, c.what,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures > 0) std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
