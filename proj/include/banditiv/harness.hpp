#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "banditiv/envs.hpp"
#include "banditiv/inference.hpp"
#include "banditiv/policy.hpp"

namespace banditiv {

enum class PolicyId { banditiv, eps_banditiv, oful, ts };

std::string to_string(PolicyId p);
PolicyId parse_policy(const std::string& name);
/// Comma-separated list; "all" selects every policy.
std::vector<PolicyId> parse_policies(const std::string& list);
inline bool is_instrumented(PolicyId p) { return p == PolicyId::banditiv || p == PolicyId::eps_banditiv; }

struct RtbSetup {
    std::vector<ImpressionRecord> impressions;
    RtbSpec spec;
    double S_gamma = 1.0;  // cap on first-stage column norms (unknown for auctions)
};

using EnvSpec = std::variant<SyntheticSpec, RtbSetup>;

struct ExperimentConfig {
    EnvSpec env;
    std::vector<PolicyId> policies{PolicyId::banditiv, PolicyId::eps_banditiv, PolicyId::oful, PolicyId::ts};
    int horizon = 2000;
    int n_trials = 20;
    std::uint64_t master_seed = 1;
    EpsilonSchedule eps = EpsilonSchedule::sqrt_log();
    double delta_conf = 0.1;
    double gamma_z = 1.0;
    double gamma_x = 1.0;
    BaselineConfig baseline;
    double alpha = 0.05;       // level of the per-trial asymptotic intervals
    int workers = 1;
    bool keep_rounds = false;  // retain arm sets, needed to replay the policy
    bool trace = false;        // per-round choice trace

    void check() const;
};

/// Problem dimensions, norm caps and true beta implied by the environment.
struct EnvFacts {
    int k = 1;
    int d = 1;
    int n_arms = 1;
    BoundsConfig bounds;
    Vec beta0;
    std::optional<Mat> gamma0;  // known for synthetic data only
};
EnvFacts env_facts(const EnvSpec& env);

// Sequential round source for one trial.
class EnvironmentStream {
public:
    EnvironmentStream(const EnvSpec& env, Rng rng);
    Round next();
    [[nodiscard]] bool wrapped() const { return wrapped_; }

private:
    const EnvSpec* env_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    bool wrapped_ = false;
};

struct ChoiceTraceRow {
    long round = 0;
    int arm = 0;
    bool explored = false;
    double score = 0.0;
    double instant_regret = 0.0;
    double bias = 0.0;
};

struct TrialResult {
    PolicyId policy = PolicyId::banditiv;
    int trial = 0;
    std::uint64_t seed = 0;
    Vec regret_curve;  // cumulative noiseless regret after each round
    Vec bias_curve;    // ||beta0 - beta_hat_t||_2 after each round
    RunRecord record;
    Vec final_beta;    // the policy's own estimate (TSLS or ridge OLS)
    // Simultaneous confidence-set containment over rounds 1..T-1 (synthetic only).
    std::optional<bool> beta_contained;
    std::optional<bool> gamma_contained;
    std::vector<Interval> asymptotic_ci;  // instrumented policies only
    std::vector<bool> ci_covers;
    std::vector<ChoiceTraceRow> trace;
    std::vector<Round> rounds;
    bool wrapped = false;
};

TrialResult run_trial(const ExperimentConfig& cfg, PolicyId policy, int trial_index);

struct CurveStats {
    Vec mean, q25, q75;
};

struct PolicyAggregate {
    PolicyId policy = PolicyId::banditiv;
    CurveStats regret;
    CurveStats bias;
    double mean_final_regret = 0.0;
    double median_final_bias = 0.0;
    std::vector<double> ci_coverage;  // per dimension, instrumented only
    std::optional<double> beta_containment;
    std::optional<double> gamma_containment;
};

struct AggregateResult {
    std::vector<PolicyAggregate> policies;
    std::vector<std::vector<TrialResult>> trials;  // [policy][trial]
    std::string config_hash;
    std::uint64_t master_seed = 0;
    int n_trials = 0;
};

/// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

CurveStats curve_stats(const std::vector<const Vec*>& curves);

/// Runs every (policy, trial) pair on up to cfg.workers threads. Results do not
/// depend on the worker count. A failing trial aborts with its (policy, trial, seed).
AggregateResult run_experiment(const ExperimentConfig& cfg);

enum class CoverageMethod { asymptotic, rerand };

struct CoverageConfig {
    CoverageMethod method = CoverageMethod::asymptotic;
    PolicyId policy = PolicyId::eps_banditiv;
    int n_resamples = 200;
    int grid_points = 20;
    double grid_span = 5.0;
};

struct CoverageResult {
    std::vector<double> rates;                       // per dimension
    std::vector<std::vector<Interval>> intervals;    // per trial
    std::vector<Vec> beta_hats;
    Vec beta0;
    std::vector<std::string> diagnostics;
};

CoverageResult coverage_experiment(const ExperimentConfig& cfg, const CoverageConfig& cov);

/// Mechanism that replays the instrumented policy of a finished trial.
ReplayMechanism make_replay_mechanism(const ExperimentConfig& cfg, const TrialResult& trial);

// Output files.
std::string config_hash(const ExperimentConfig& cfg);
void write_curves_csv(const AggregateResult& result, const std::filesystem::path& path);
void write_trace_csv(const TrialResult& trial, const std::filesystem::path& path);
void write_outputs(const ExperimentConfig& cfg, const AggregateResult& result, const std::filesystem::path& dir,
                   bool records = false);

/// printf("%.9g").
std::string format_g9(double v);

}  // namespace banditiv
