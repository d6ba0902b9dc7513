#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "banditiv/estimators.hpp"
#include "banditiv/model.hpp"
#include "banditiv/policy.hpp"

namespace banditiv {

// Trajectory of an instrumented bandit run. deltafit row s is Gamma_hat_s beta_hat_s,
// the reduced-form fit in force when round s was decided.
struct RunRecord {
    Mat Z;         // t x k chosen instruments
    Mat X;         // t x d chosen features
    Vec Y;         // t rewards
    Mat deltafit;  // t x k
    Mat gamma_hat; // final k x d
    Vec beta_hat;  // final d
    Mat U;         // final k x k
    double gamma_z = 1.0;
    double gamma_x = 1.0;

    [[nodiscard]] long t() const { return static_cast<long>(Y.size()); }
    [[nodiscard]] int k() const { return static_cast<int>(Z.cols()); }
    [[nodiscard]] int d() const { return static_cast<int>(X.cols()); }
    void check() const;
};

struct VarianceEstimate {
    Mat S_hat;  // d x d
    long t = 0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = false;

    [[nodiscard]] bool contains(double v) const { return !empty && lo <= v && v <= hi; }
    [[nodiscard]] double width() const { return empty ? 0.0 : hi - lo; }
};

/// v_s = y_s - deltafit_s' z_s.
Vec residuals(const RunRecord& rec);

/// (sum v^2) A^{-1} (Gh' Szz Gh) A^{-1} with A = Gh' Szz Gh and Szz = sum z z'.
VarianceEstimate variance_estimate(const RunRecord& rec);

/// beta_i +/- q_{1-alpha/2} sqrt(S_ii / t). Negative diagonals are clamped to zero.
std::vector<Interval> asymptotic_ci(const Vec& beta_hat, const VarianceEstimate& s, long t, double alpha);

struct RerandConfig {
    int n_resamples = 200;
    double alpha = 0.05;
    std::vector<Vec> tau_grid;

    void check() const;
};

/// Re-runs the instrumented policy against the recorded arm sets under a sharp
/// null: every counterfactual outcome is y_t + <tau, x^H_t - x_t>. The first-stage
/// coefficients stay fixed at the recorded final estimate.
class ReplayMechanism {
public:
    ReplayMechanism(std::vector<Round> rounds, EpsilonSchedule schedule, Widths widths);

    struct Path {
        Mat Z;  // t x k
        Mat X;  // t x d
        Vec Y;  // t
    };

    [[nodiscard]] Path replay(const RunRecord& rec, const Vec& tau, Rng& rng) const;

    [[nodiscard]] const std::vector<Round>& rounds() const { return rounds_; }
    [[nodiscard]] const EpsilonSchedule& schedule() const { return schedule_; }
    [[nodiscard]] const Widths& widths() const { return widths_; }

private:
    std::vector<Round> rounds_;
    EpsilonSchedule schedule_;
    Widths widths_;
};

struct RerandResult {
    Vec p_values;
    std::vector<bool> reject;
};

/// Sharp-null re-randomization test. Replication i draws from the substream
/// derive_seed(seed, {i}), so p-values are a deterministic function of tau.
RerandResult rerand_test(const RunRecord& rec, const Vec& tau, const RerandConfig& cfg,
                         const ReplayMechanism& mechanism, std::uint64_t seed);

/// Ridge second stage on a counterfactual path with the first stage fixed.
Vec rerand_statistic(const ReplayMechanism::Path& path, const Mat& gamma_hat, double gamma);

struct RerandInterval {
    std::vector<Interval> intervals;
    std::vector<std::string> diagnostics;
};

/// Convex hull, per dimension, of grid values whose test is not rejected.
RerandInterval rerand_ci(const RunRecord& rec, const RerandConfig& cfg, const ReplayMechanism& mechanism,
                         std::uint64_t seed);

/// n points spanning beta_hat +/- span * half_width jointly in every dimension.
std::vector<Vec> default_tau_grid(const Vec& beta_hat, const Vec& half_width, int n = 20, double span = 5.0);

}  // namespace banditiv
