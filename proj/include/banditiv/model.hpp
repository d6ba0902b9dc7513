#pragma once

#include <optional>
#include <string>
#include <vector>

#include "banditiv/types.hpp"

namespace banditiv {

struct ProblemDims {
    int k = 1;        // instrument dimension
    int d = 1;        // feature dimension
    int horizon = 1;  // rounds T
    int n_arms = 1;
};

// Norm caps and the minimum-eigenvalue floor of E[zz']. S_beta and S_gamma
// stand in for the unknown norms of beta0 and the columns of Gamma0 inside the
// confidence widths, so they have no defaults.
struct BoundsConfig {
    double L_z = 0.0;
    double L_x = 0.0;
    double L_y = 0.0;
    double lambda_min = 0.0;
    double S_beta = 0.0;
    double S_gamma = 0.0;
};

// x = Gamma0' z + e + u,  y = x' beta0 + e' rho + eps.
struct TwoStageModel {
    Mat gamma0;  // k x d
    Vec beta0;   // d
    Vec rho;     // d
    double sigma_u = 0.1;
    double sigma_eps = 1.0;
    double sigma_e = 1.0;
};

struct ModelSpec {
    ProblemDims dims;
    BoundsConfig bounds;
    TwoStageModel model;
};

// One decision epoch. Rewards for every arm are realized when the round is
// generated; mean_rewards carries the noiseless values when ground truth is known.
struct Round {
    Mat instruments;  // n_arms x k
    Mat features;     // n_arms x d
    Vec rewards;      // n_arms
    std::optional<Vec> mean_rewards;

    [[nodiscard]] int n_arms() const { return static_cast<int>(instruments.rows()); }
    [[nodiscard]] double reward(int arm) const { return rewards(arm); }
};

/// <Gamma0' z, beta0>.
double mean_reward(const Vec& z, const Mat& gamma0, const Vec& beta0);

/// Every violated invariant, in a fixed order; empty when the configuration is usable.
std::vector<std::string> validate(const ProblemDims& dims, const BoundsConfig& bounds, const TwoStageModel& model);

inline std::vector<std::string> validate(const ModelSpec& spec) { return validate(spec.dims, spec.bounds, spec.model); }

/// Synthetic defaults: all-ones Gamma0 and beta0, rho applied to every feature,
/// 50 arms, instruments uniform on [-3, 3], u with variance 0.01. Norm caps are
/// derived from the generating distribution and S_beta/S_gamma are the true norms.
ModelSpec default_synthetic_spec(int k, int d, double rho, int horizon);

/// Recomputes L_z, L_x, L_y, lambda_min, S_beta and S_gamma from the model for
/// instruments uniform on [-z_half_width, z_half_width].
BoundsConfig honest_bounds(const TwoStageModel& model, int k, int d, double z_half_width = 3.0);

}  // namespace banditiv
