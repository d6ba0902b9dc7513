#pragma once

#include "banditiv/types.hpp"

namespace banditiv {

// Online sufficient statistics for ridge two-stage least squares.
//   U  = gamma_z I + sum z z'
//   V  = sum z x'
//   zy = sum z y
struct SuffStats {
    Mat U;
    Mat V;
    Vec zy;
    double gamma_z = 1.0;
    double gamma_x = 1.0;
    long t = 0;

    [[nodiscard]] int k() const { return static_cast<int>(U.rows()); }
    [[nodiscard]] int d() const { return static_cast<int>(V.cols()); }

    // Adds one observation. Throws DataError on non-finite or mis-sized input.
    void ingest(const Vec& z, const Vec& x, double y);
};

struct Estimates {
    Mat gamma_hat;  // k x d, U^{-1} V
    Mat W;          // d x d, gamma_x I + Gamma_hat' (U - gamma_z I) Gamma_hat
    Vec Q;          // d, Gamma_hat' zy
    Vec beta_hat;   // d, W^{-1} Q
    Vec delta_hat;  // k, U^{-1} zy
    Mat U;          // k x k, carried for the instrument-side confidence width
    double gamma_x = 1.0;
    long t = 0;
};

SuffStats init_stats(int k, int d, double gamma_z = 1.0, double gamma_x = 1.0);

// Functional form of SuffStats::ingest.
SuffStats ingest(SuffStats stats, const Vec& z, const Vec& x, double y);

Estimates estimate(const SuffStats& stats);

// Second stage only, with the first-stage coefficients held at gamma_hat.
Estimates estimate_with_first_stage(const SuffStats& stats, const Mat& gamma_hat);

// From-scratch ridge TSLS on stacked data. Zero ridge is allowed as long as
// Z'Z and the second-stage Gram matrix are nonsingular.
Estimates batch_tsls(const Mat& Z, const Mat& X, const Vec& Y, double gamma_z, double gamma_x);

// Plain ridge regression of y on x, used by the OFUL and Thompson baselines and
// as the endogeneity-biased comparison estimator.
struct RidgeStats {
    Mat M;   // gamma I + sum x x'
    Vec xy;  // sum x y
    double gamma = 1.0;
    long t = 0;

    explicit RidgeStats(int d = 1, double gamma_ = 1.0);
    void ingest(const Vec& x, double y);
    [[nodiscard]] Vec beta_hat() const;
};

}  // namespace banditiv
