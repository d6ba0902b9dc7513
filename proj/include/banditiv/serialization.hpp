#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "banditiv/estimators.hpp"
#include "banditiv/harness.hpp"
#include "banditiv/inference.hpp"
#include "banditiv/model.hpp"

namespace banditiv {

using Json = nlohmann::json;

// Matrices are row-major nested arrays; vectors are flat arrays.
Json to_json(const Mat& m);
Json to_json(const Vec& v);
Mat matrix_from_json(const Json& j, const char* field);
Vec vector_from_json(const Json& j, const char* field);

// Model spec document: {k, d, T, n_arms, L_z, L_x, L_y, lambda_min, S_beta,
// S_gamma, Gamma0, beta0, rho, sigma_u, sigma_eps, sigma_e}.
Json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const Json& j);
ModelSpec load_model_spec(const std::filesystem::path& path);

/// {t, Gamma_hat, beta_hat, delta_hat}
Json to_json(const Estimates& est);

Json to_json(const Interval& iv);
Json to_json(const std::vector<Interval>& ivs);

struct RerandSummary {
    double alpha = 0.05;
    int n_resamples = 0;
    Vec p_values;
    std::vector<Interval> ci;
};

/// {beta_hat, S_hat, t, asymptotic_ci, rerand: {alpha, N_H, p_values, ci}}
Json inference_report(const Vec& beta_hat, const VarianceEstimate& s, const std::vector<Interval>& ci,
                      const std::optional<RerandSummary>& rerand);

Json to_json(const ExperimentConfig& cfg);

// A finished trial with everything needed to replay its policy offline.
struct StoredTrial {
    RunRecord record;
    std::vector<Round> rounds;
    EpsilonSchedule schedule = EpsilonSchedule::zero();
    Widths widths;
    std::optional<Vec> beta0;
    std::string policy;
};

Json trial_record_to_json(const ExperimentConfig& cfg, const TrialResult& trial);
StoredTrial stored_trial_from_json(const Json& j);
StoredTrial load_stored_trial(const std::filesystem::path& path);

}  // namespace banditiv
