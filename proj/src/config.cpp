#include "trialkit/config.hpp"

#include <algorithm>
#include <fstream>

#include "trialkit/errors.hpp"

namespace trialkit {

void Thresholds::validate() const {
    if (min_weekly < 0) throw InvalidInput("min_weekly must be >= 0");
    if (!(min_weekly < max_weekly)) throw InvalidInput("need min_weekly < max_weekly");
    if (max_weekly > 14) throw InvalidInput("max_weekly cannot exceed 14 decision times");
}

void RateLimit::validate() const {
    if (max_per_minute < 1) throw InvalidInput("max_per_minute must be >= 1");
}

void RetryPolicy::validate() const {
    if (max_attempts < 1) throw InvalidInput("max_attempts must be >= 1");
}

void ServiceConfig::validate() const {
    prior.validate();
    logistic.validate();
    cost.validate();
    if (quad_nodes < 1) throw InvalidInput("quadrature nodes must be >= 1");
    thresholds.validate();
    rate_limit.validate();
    retry.validate();
}

void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                        const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return key == k; });
        if (!known) throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
}

namespace {

double get_number(const nlohmann::json& j, const char* key, double fallback,
                  const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
    return j.at(key).get<double>();
}

int get_int(const nlohmann::json& j, const char* key, int fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
    return j.at(key).get<int>();
}

Vec5 parse_vec5(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 5) throw ConfigError(where + " must be an array of 5 numbers");
    Vec5 v;
    for (int i = 0; i < 5; ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

Mat5 parse_mat5(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 5) throw ConfigError(where + " must be a 5x5 array");
    Mat5 m;
    for (int r = 0; r < 5; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (!row.is_array() || row.size() != 5) throw ConfigError(where + " must be a 5x5 array");
        for (int c = 0; c < 5; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

nlohmann::json vec5_to_json(const Vec5& v) {
    nlohmann::json out = nlohmann::json::array();
    for (int i = 0; i < 5; ++i) out.push_back(v(i));
    return out;
}

nlohmann::json mat5_to_json(const Mat5& m) {
    nlohmann::json out = nlohmann::json::array();
    for (int r = 0; r < 5; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < 5; ++c) row.push_back(m(r, c));
        out.push_back(row);
    }
    return out;
}

PriorSpec parse_prior(const nlohmann::json& j) {
    require_known_keys(j,
                       {"scale", "noise_var", "mu_alpha0", "sigma_alpha0", "mu_alpha1",
                        "sigma_alpha1", "mu_beta", "sigma_beta"},
                       "prior");
    const double scale = get_number(j, "scale", 1.0, "prior");
    if (!(scale > 0.0)) throw ConfigError("prior.scale must be positive");
    PriorSpec prior = PriorSpec::scaled_identity(scale, get_number(j, "noise_var", 1.0, "prior"));
    if (j.contains("mu_alpha0")) prior.mu_alpha0 = parse_vec5(j.at("mu_alpha0"), "prior.mu_alpha0");
    if (j.contains("mu_alpha1")) prior.mu_alpha1 = parse_vec5(j.at("mu_alpha1"), "prior.mu_alpha1");
    if (j.contains("mu_beta")) prior.mu_beta = parse_vec5(j.at("mu_beta"), "prior.mu_beta");
    if (j.contains("sigma_alpha0"))
        prior.sigma_alpha0 = parse_mat5(j.at("sigma_alpha0"), "prior.sigma_alpha0");
    if (j.contains("sigma_alpha1"))
        prior.sigma_alpha1 = parse_mat5(j.at("sigma_alpha1"), "prior.sigma_alpha1");
    if (j.contains("sigma_beta")) prior.sigma_beta = parse_mat5(j.at("sigma_beta"), "prior.sigma_beta");
    return prior;
}

LogisticParams parse_logistic(const nlohmann::json& j) {
    require_known_keys(j, {"l_min", "l_max", "steepness_b", "offset_c", "shape_k"}, "logistic");
    LogisticParams p;
    p.l_min = get_number(j, "l_min", p.l_min, "logistic");
    p.l_max = get_number(j, "l_max", p.l_max, "logistic");
    p.steepness_b = get_number(j, "steepness_b", p.steepness_b, "logistic");
    p.offset_c = get_number(j, "offset_c", p.offset_c, "logistic");
    p.shape_k = get_number(j, "shape_k", p.shape_k, "logistic");
    return p;
}

CostParams parse_cost(const nlohmann::json& j) {
    require_known_keys(
        j, {"xi1", "xi2", "brush_threshold_b", "dosage_threshold_a1", "dosage_threshold_a2"},
        "cost");
    CostParams p;
    p.xi1 = get_number(j, "xi1", p.xi1, "cost");
    p.xi2 = get_number(j, "xi2", p.xi2, "cost");
    p.brush_threshold_b = get_number(j, "brush_threshold_b", p.brush_threshold_b, "cost");
    p.dosage_threshold_a1 = get_number(j, "dosage_threshold_a1", p.dosage_threshold_a1, "cost");
    p.dosage_threshold_a2 = get_number(j, "dosage_threshold_a2", p.dosage_threshold_a2, "cost");
    return p;
}

}  // namespace

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j) {
    require_known_keys(
        j, {"prior", "logistic", "cost", "quadrature", "thresholds", "rate_limit", "retry",
            "trial_seed"},
        "config");
    ServiceConfig cfg;
    try {
        if (j.contains("prior")) cfg.prior = parse_prior(j.at("prior"));
        if (j.contains("logistic")) cfg.logistic = parse_logistic(j.at("logistic"));
        if (j.contains("cost")) cfg.cost = parse_cost(j.at("cost"));
        if (j.contains("quadrature")) {
            require_known_keys(j.at("quadrature"), {"nodes"}, "quadrature");
            cfg.quad_nodes = get_int(j.at("quadrature"), "nodes", cfg.quad_nodes, "quadrature");
        }
        if (j.contains("thresholds")) {
            require_known_keys(j.at("thresholds"), {"min_weekly", "max_weekly"}, "thresholds");
            cfg.thresholds.min_weekly =
                get_int(j.at("thresholds"), "min_weekly", cfg.thresholds.min_weekly, "thresholds");
            cfg.thresholds.max_weekly =
                get_int(j.at("thresholds"), "max_weekly", cfg.thresholds.max_weekly, "thresholds");
        }
        if (j.contains("rate_limit")) {
            require_known_keys(j.at("rate_limit"), {"max_per_minute"}, "rate_limit");
            cfg.rate_limit.max_per_minute = get_int(j.at("rate_limit"), "max_per_minute",
                                                    cfg.rate_limit.max_per_minute, "rate_limit");
        }
        if (j.contains("retry")) {
            require_known_keys(j.at("retry"), {"max_attempts", "batch"}, "retry");
            cfg.retry.max_attempts =
                get_int(j.at("retry"), "max_attempts", cfg.retry.max_attempts, "retry");
            if (j.at("retry").contains("batch")) {
                if (!j.at("retry").at("batch").is_boolean())
                    throw ConfigError("retry.batch must be a boolean");
                cfg.retry.batch = j.at("retry").at("batch").get<bool>();
            }
        }
        if (j.contains("trial_seed")) {
            if (!j.at("trial_seed").is_number_unsigned())
                throw ConfigError("trial_seed must be a non-negative integer");
            cfg.trial_seed = j.at("trial_seed").get<std::uint64_t>();
        }
        cfg.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return cfg;
}

nlohmann::json ServiceConfig::to_json() const {
    nlohmann::json prior_json{
        {"noise_var", prior.noise_var},
        {"mu_alpha0", vec5_to_json(prior.mu_alpha0)},
        {"sigma_alpha0", mat5_to_json(prior.sigma_alpha0)},
        {"mu_alpha1", vec5_to_json(prior.mu_alpha1)},
        {"sigma_alpha1", mat5_to_json(prior.sigma_alpha1)},
        {"mu_beta", vec5_to_json(prior.mu_beta)},
        {"sigma_beta", mat5_to_json(prior.sigma_beta)},
    };
    return nlohmann::json{
        {"prior", prior_json},
        {"logistic",
         {{"l_min", logistic.l_min},
          {"l_max", logistic.l_max},
          {"steepness_b", logistic.steepness_b},
          {"offset_c", logistic.offset_c},
          {"shape_k", logistic.shape_k}}},
        {"cost",
         {{"xi1", cost.xi1},
          {"xi2", cost.xi2},
          {"brush_threshold_b", cost.brush_threshold_b},
          {"dosage_threshold_a1", cost.dosage_threshold_a1},
          {"dosage_threshold_a2", cost.dosage_threshold_a2}}},
        {"quadrature", {{"nodes", quad_nodes}}},
        {"thresholds",
         {{"min_weekly", thresholds.min_weekly}, {"max_weekly", thresholds.max_weekly}}},
        {"rate_limit", {{"max_per_minute", rate_limit.max_per_minute}}},
        {"retry", {{"max_attempts", retry.max_attempts}, {"batch", retry.batch}}},
        {"trial_seed", trial_seed},
    };
}

ServiceConfig load_service_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config is not valid JSON: " + path + ": " + e.what());
    }
    return ServiceConfig::from_json(j);
}

}  // namespace trialkit
