#include "banditiv/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "banditiv/policy.hpp"

namespace banditiv {

namespace {

// NaN and infinities are not valid JSON numbers.
Json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

const Json& field(const Json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) throw DataError(std::string("missing field '") + name + "'");
    return j.at(name);
}

double get_double(const Json& j, const char* name) {
    const Json& v = field(j, name);
    if (!v.is_number()) throw DataError(std::string("field '") + name + "' must be a number");
    return v.get<double>();
}

int get_int(const Json& j, const char* name) {
    const Json& v = field(j, name);
    if (!v.is_number_integer()) throw DataError(std::string("field '") + name + "' must be an integer");
    return v.get<int>();
}

double get_double_or(const Json& j, const char* name, double fallback) {
    return j.contains(name) ? get_double(j, name) : fallback;
}

}  // namespace

Json to_json(const Mat& m) {
    Json out = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(number(m(i, c)));
        out.push_back(std::move(row));
    }
    return out;
}

Json to_json(const Vec& v) {
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
    return out;
}

Mat matrix_from_json(const Json& j, const char* name) {
    if (!j.is_array()) throw DataError(std::string("field '") + name + "' must be a nested array");
    const auto rows = static_cast<Index>(j.size());
    const Index cols = rows > 0 && j[0].is_array() ? static_cast<Index>(j[0].size()) : 0;
    Mat m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw DataError(std::string("field '") + name + "' has ragged rows");
        }
        for (Index c = 0; c < cols; ++c) {
            const Json& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw DataError(std::string("field '") + name + "' holds a non-number");
            m(i, c) = v.get<double>();
        }
    }
    return m;
}

Vec vector_from_json(const Json& j, const char* name) {
    if (!j.is_array()) throw DataError(std::string("field '") + name + "' must be an array");
    Vec v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw DataError(std::string("field '") + name + "' holds a non-number");
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

Json to_json(const ModelSpec& s) {
    return Json{{"k", s.dims.k},
                {"d", s.dims.d},
                {"T", s.dims.horizon},
                {"n_arms", s.dims.n_arms},
                {"L_z", s.bounds.L_z},
                {"L_x", s.bounds.L_x},
                {"L_y", s.bounds.L_y},
                {"lambda_min", s.bounds.lambda_min},
                {"S_beta", s.bounds.S_beta},
                {"S_gamma", s.bounds.S_gamma},
                {"Gamma0", to_json(s.model.gamma0)},
                {"beta0", to_json(s.model.beta0)},
                {"rho", to_json(s.model.rho)},
                {"sigma_u", s.model.sigma_u},
                {"sigma_eps", s.model.sigma_eps},
                {"sigma_e", s.model.sigma_e}};
}

// Norm caps may be omitted; they are then derived from the model.
ModelSpec model_spec_from_json(const Json& j) {
    ModelSpec s;
    s.dims.k = get_int(j, "k");
    s.dims.d = get_int(j, "d");
    s.dims.horizon = j.contains("T") ? get_int(j, "T") : 1;
    s.dims.n_arms = j.contains("n_arms") ? get_int(j, "n_arms") : 50;
    s.model.gamma0 = matrix_from_json(field(j, "Gamma0"), "Gamma0");
    s.model.beta0 = vector_from_json(field(j, "beta0"), "beta0");
    const Json& rho = field(j, "rho");
    if (rho.is_number()) {
        s.model.rho = Vec::Constant(s.dims.d, rho.get<double>());
    } else {
        s.model.rho = vector_from_json(rho, "rho");
    }
    s.model.sigma_u = get_double_or(j, "sigma_u", s.model.sigma_u);
    s.model.sigma_eps = get_double_or(j, "sigma_eps", s.model.sigma_eps);
    s.model.sigma_e = get_double_or(j, "sigma_e", s.model.sigma_e);
    if (s.dims.k < 1 || s.dims.d < 1) throw ConfigError("k and d must be positive");
    if (s.model.gamma0.rows() != s.dims.k || s.model.gamma0.cols() != s.dims.d) {
        throw ConfigError("Gamma0 must be k x d");
    }
    if (s.model.beta0.size() != s.dims.d || s.model.rho.size() != s.dims.d) {
        throw ConfigError("beta0 and rho must have length d");
    }
    const BoundsConfig derived = honest_bounds(s.model, s.dims.k, s.dims.d);
    s.bounds.L_z = get_double_or(j, "L_z", derived.L_z);
    s.bounds.L_x = get_double_or(j, "L_x", derived.L_x);
    s.bounds.L_y = get_double_or(j, "L_y", derived.L_y);
    s.bounds.lambda_min = get_double_or(j, "lambda_min", derived.lambda_min);
    s.bounds.S_beta = get_double_or(j, "S_beta", derived.S_beta);
    s.bounds.S_gamma = get_double_or(j, "S_gamma", derived.S_gamma);
    return s;
}

namespace {

Json parse_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

}  // namespace

ModelSpec load_model_spec(const std::filesystem::path& path) {
    const Json j = parse_file(path);
    try {
        return model_spec_from_json(j);
    } catch (const DataError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

Json to_json(const Estimates& est) {
    return Json{{"t", est.t},
                {"Gamma_hat", to_json(est.gamma_hat)},
                {"beta_hat", to_json(est.beta_hat)},
                {"delta_hat", to_json(est.delta_hat)}};
}

Json to_json(const Interval& iv) {
    if (iv.empty) return Json{{"lo", nullptr}, {"hi", nullptr}, {"empty", true}};
    return Json{{"lo", number(iv.lo)}, {"hi", number(iv.hi)}};
}

Json to_json(const std::vector<Interval>& ivs) {
    Json out = Json::array();
    for (const auto& iv : ivs) out.push_back(to_json(iv));
    return out;
}

Json inference_report(const Vec& beta_hat, const VarianceEstimate& s, const std::vector<Interval>& ci,
                      const std::optional<RerandSummary>& rerand) {
    Json out{{"beta_hat", to_json(beta_hat)}, {"S_hat", to_json(s.S_hat)}, {"t", s.t}, {"asymptotic_ci", to_json(ci)}};
    if (rerand) {
        out["rerand"] = Json{{"alpha", rerand->alpha},
                             {"N_H", rerand->n_resamples},
                             {"p_values", to_json(rerand->p_values)},
                             {"ci", to_json(rerand->ci)}};
    }
    return out;
}

namespace {

Json schedule_json(const EpsilonSchedule& e) {
    Json out{{"kind", e.name()}};
    if (e.kind() == EpsilonSchedule::Kind::explicit_list) out["values"] = e.values();
    return out;
}

EpsilonSchedule schedule_from_json(const Json& j) {
    const Json& kind = field(j, "kind");
    if (!kind.is_string()) throw DataError("schedule kind must be a string");
    if (kind.get<std::string>() == "explicit") {
        return EpsilonSchedule::explicit_list(field(j, "values").get<std::vector<double>>());
    }
    try {
        return EpsilonSchedule::parse(kind.get<std::string>());
    } catch (const ConfigError& e) {
        throw DataError(e.what());
    }
}

}  // namespace

// Worker count is excluded: outputs must not depend on it.
Json to_json(const ExperimentConfig& cfg) {
    Json j;
    if (const auto* s = std::get_if<SyntheticSpec>(&cfg.env)) {
        Json env = to_json(s->spec);
        env["type"] = "synthetic";
        env["z_low"] = s->z_low;
        env["z_high"] = s->z_high;
        j["environment"] = std::move(env);
    } else {
        const auto& r = std::get<RtbSetup>(cfg.env);
        // Digest of the impressions so two data files never share a hash.
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&h](double v) {
            std::uint64_t bits = 0;
            std::memcpy(&bits, &v, sizeof bits);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xffU;
                h *= 0x100000001b3ULL;
            }
        };
        for (const auto& imp : r.impressions) {
            mix(imp.paying_price);
            mix(imp.bidding_price);
            for (double v : imp.slot_features) mix(v);
        }
        char digest[17];
        std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(h));
        j["environment"] = Json{{"type", "rtb"},
                                {"n_impressions", r.impressions.size()},
                                {"impressions_digest", digest},
                                {"bid_grid", r.spec.bid_grid},
                                {"beta_basic", r.spec.beta_basic},
                                {"beta_ate", r.spec.beta_ate},
                                {"rho", r.spec.rho},
                                {"shock_scale", r.spec.shock_scale},
                                {"competitor_response", r.spec.competitor_response},
                                {"noise_sd", r.spec.noise_sd},
                                {"S_gamma", r.S_gamma}};
    }
    Json pols = Json::array();
    for (auto p : cfg.policies) pols.push_back(to_string(p));
    j["policies"] = std::move(pols);
    j["T"] = cfg.horizon;
    j["n_trials"] = cfg.n_trials;
    j["master_seed"] = cfg.master_seed;
    j["eps_schedule"] = schedule_json(cfg.eps);
    j["delta_conf"] = cfg.delta_conf;
    j["gamma_z"] = cfg.gamma_z;
    j["gamma_x"] = cfg.gamma_x;
    j["baseline"] = Json{{"gamma", cfg.baseline.gamma},
                         {"ts_scale", cfg.baseline.ts_scale},
                         {"noise_scale", cfg.baseline.noise_scale}};
    j["alpha"] = cfg.alpha;
    return j;
}

namespace {

Json round_json(const Round& r) {
    Json out{{"Z", to_json(r.instruments)}, {"X", to_json(r.features)}, {"rewards", to_json(r.rewards)}};
    if (r.mean_rewards) out["mean_rewards"] = to_json(*r.mean_rewards);
    return out;
}

Round round_from_json(const Json& j) {
    Round r;
    r.instruments = matrix_from_json(field(j, "Z"), "Z");
    r.features = matrix_from_json(field(j, "X"), "X");
    r.rewards = vector_from_json(field(j, "rewards"), "rewards");
    if (j.contains("mean_rewards")) r.mean_rewards = vector_from_json(j.at("mean_rewards"), "mean_rewards");
    if (r.features.rows() != r.instruments.rows() || r.rewards.size() != r.instruments.rows()) {
        throw DataError("stored round has inconsistent arm counts");
    }
    return r;
}

}  // namespace

Json trial_record_to_json(const ExperimentConfig& cfg, const TrialResult& trial) {
    const RunRecord& rec = trial.record;
    const EnvFacts facts = env_facts(cfg.env);
    const ConfidenceConfig conf =
        make_confidence_config(facts.bounds, cfg.horizon, cfg.delta_conf, cfg.gamma_z, cfg.gamma_x);
    const Widths w = widths(conf, facts.k, facts.d, 1);
    const EpsilonSchedule schedule = trial.policy == PolicyId::eps_banditiv ? cfg.eps : EpsilonSchedule::zero();

    Json out{{"policy", to_string(trial.policy)},
             {"trial", trial.trial},
             {"seed", trial.seed},
             {"Z", to_json(rec.Z)},
             {"X", to_json(rec.X)},
             {"Y", to_json(rec.Y)},
             {"deltafit", to_json(rec.deltafit)},
             {"Gamma_hat", to_json(rec.gamma_hat)},
             {"beta_hat", to_json(rec.beta_hat)},
             {"gamma_z", rec.gamma_z},
             {"gamma_x", rec.gamma_x},
             {"eps_schedule", schedule_json(schedule)},
             {"widths", Json{{"B", w.B}, {"G", w.G}}},
             {"beta0", to_json(facts.beta0)}};
    Json rounds = Json::array();
    for (const auto& r : trial.rounds) rounds.push_back(round_json(r));
    out["rounds"] = std::move(rounds);
    return out;
}

StoredTrial stored_trial_from_json(const Json& j) {
    StoredTrial s;
    RunRecord& rec = s.record;
    rec.Z = matrix_from_json(field(j, "Z"), "Z");
    rec.X = matrix_from_json(field(j, "X"), "X");
    rec.Y = vector_from_json(field(j, "Y"), "Y");
    rec.deltafit = matrix_from_json(field(j, "deltafit"), "deltafit");
    rec.gamma_hat = matrix_from_json(field(j, "Gamma_hat"), "Gamma_hat");
    rec.beta_hat = vector_from_json(field(j, "beta_hat"), "beta_hat");
    rec.gamma_z = get_double(j, "gamma_z");
    rec.gamma_x = get_double(j, "gamma_x");
    rec.check();
    if (rec.Z.rows() == 0) throw DataError("run record is empty");
    if (rec.gamma_hat.rows() != rec.k() || rec.gamma_hat.cols() != rec.d() || rec.beta_hat.size() != rec.d()) {
        throw DataError("run record: Gamma_hat or beta_hat has the wrong shape");
    }
    rec.U = rec.gamma_z * Mat::Identity(rec.k(), rec.k()) + rec.Z.transpose() * rec.Z;
    if (j.contains("policy") && j.at("policy").is_string()) s.policy = j.at("policy").get<std::string>();
    if (j.contains("eps_schedule")) s.schedule = schedule_from_json(j.at("eps_schedule"));
    if (j.contains("widths")) {
        s.widths.B = get_double(j.at("widths"), "B");
        s.widths.G = get_double(j.at("widths"), "G");
    }
    if (j.contains("beta0")) s.beta0 = vector_from_json(j.at("beta0"), "beta0");
    if (j.contains("rounds")) {
        for (const auto& r : j.at("rounds")) s.rounds.push_back(round_from_json(r));
    }
    return s;
}

StoredTrial load_stored_trial(const std::filesystem::path& path) {
    return stored_trial_from_json(parse_file(path));
}

}  // namespace banditiv
