#pragma once

#include <string>
#include <vector>

#include "banditiv/estimators.hpp"
#include "banditiv/model.hpp"
#include "banditiv/rng.hpp"

namespace banditiv {

struct ConfidenceConfig {
    double delta_conf = 0.1;
    int horizon = 1;
    double S_beta = 1.0;
    double S_gamma = 1.0;
    double L_x = 1.0;
    double L_y = 1.0;
    double gamma_z = 1.0;
    double gamma_x = 1.0;

    void check() const;
};

ConfidenceConfig make_confidence_config(const BoundsConfig& bounds, int horizon, double delta_conf = 0.1,
                                        double gamma_z = 1.0, double gamma_x = 1.0);

// Exploration probabilities for the epsilon-greedy variant. Values are clamped
// to [0, 1]; an explicit list repeats its last entry past the end.
class EpsilonSchedule {
public:
    enum class Kind { zero, sqrt_log_t_over_t, explicit_list };

    static EpsilonSchedule zero() { return EpsilonSchedule(Kind::zero, {}); }
    static EpsilonSchedule sqrt_log() { return EpsilonSchedule(Kind::sqrt_log_t_over_t, {}); }
    static EpsilonSchedule explicit_list(std::vector<double> values);
    static EpsilonSchedule parse(const std::string& name);

    // t is the round index; t >= 1 (round 0 is always a random pull).
    [[nodiscard]] double at(long t) const;
    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] std::string name() const;

private:
    EpsilonSchedule(Kind kind, std::vector<double> values) : kind_(kind), values_(std::move(values)) {}
    Kind kind_;
    std::vector<double> values_;
};

struct Widths {
    double B = 0.0;
    double G = 0.0;
};

/// Radius of the beta confidence ellipsoid in the W_t norm.
double width_B(const ConfidenceConfig& cfg, int d, long t_round);

/// Radius of each Gamma column ellipsoid in the U_t norm.
double width_G(const ConfidenceConfig& cfg, int k, long t_round);

Widths widths(const ConfidenceConfig& cfg, int k, int d, long t_round);

/// Closed-form upper bound of max <Gamma' z, beta> over the two confidence sets:
///   <Gh'z, bh> + B ||Gh'z||_{W^-1} + sqrt(d) G ||z||_{U^-1} (||bh|| + B / sqrt(gamma_x)).
double optimistic_score(const Vec& z, const Estimates& est, const Widths& w);

/// optimistic_score for every row of an instrument matrix.
Vec optimistic_scores(const Mat& instruments, const Estimates& est, const Widths& w);

struct ArmChoice {
    int arm = 0;
    bool explored = false;
    double score = 0.0;  // optimistic score of the chosen arm (NaN if not computed)
};

/// Index of the largest entry, lowest index on ties.
int argmax_lowest(const Vec& values);

/// Epsilon-greedy optimistic selection on instruments. Draws exactly one
/// uniform per call for the exploration coin (plus one arm index when exploring)
/// so that eps = 0 consumes the same stream as a positive schedule.
ArmChoice select_arm(const Round& round, const Estimates& est, const Widths& w, double eps_t, Rng& rng);

/// Uniform random arm; used for the forced first pull.
int random_arm(const Round& round, Rng& rng);

// Baselines run on the realized features of every arm.
struct BaselineConfig {
    double gamma = 1.0;      // ridge
    double ts_scale = 1.0;   // posterior scale v for Thompson sampling
    double delta_conf = 0.1;
    double S_beta = 1.0;
    double L_x = 1.0;
    double noise_scale = 1.0;
};

/// OFUL radius (Abbasi-Yadkori et al. form with R = noise_scale).
double oful_width(const BaselineConfig& cfg, int d, long t);

Vec oful_scores(const Round& round, const RidgeStats& state, double width);

int select_oful(const Round& round, const RidgeStats& state, long t_round, const BaselineConfig& cfg);

/// Draw from Normal(beta_ols, v^2 M^{-1}).
Vec sample_ts_parameter(const RidgeStats& state, double scale, Rng& rng);

int select_ts(const Round& round, const RidgeStats& state, const BaselineConfig& cfg, Rng& rng);

}  // namespace banditiv
