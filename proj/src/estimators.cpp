#include "banditiv/estimators.hpp"

#include <cmath>
#include <sstream>

#include "banditiv/linalg.hpp"

namespace banditiv {

SuffStats init_stats(int k, int d, double gamma_z, double gamma_x) {
    if (k < 1 || d < 1) throw ConfigError("init_stats: dimensions must be positive");
    if (!(gamma_z > 0) || !(gamma_x > 0)) throw ConfigError("init_stats: ridge parameters must be positive");
    SuffStats s;
    s.U = gamma_z * Mat::Identity(k, k);
    s.V = Mat::Zero(k, d);
    s.zy = Vec::Zero(k);
    s.gamma_z = gamma_z;
    s.gamma_x = gamma_x;
    s.t = 0;
    return s;
}

void SuffStats::ingest(const Vec& z, const Vec& x, double y) {
    if (z.size() != k() || x.size() != d()) {
        std::ostringstream os;
        os << "ingest: expected z of length " << k() << " and x of length " << d() << ", got " << z.size()
           << " and " << x.size();
        throw DataError(os.str());
    }
    if (!z.allFinite() || !x.allFinite() || !std::isfinite(y)) throw DataError("ingest: non-finite observation");
    U.noalias() += z * z.transpose();
    V.noalias() += z * x.transpose();
    zy.noalias() += z * y;
    ++t;
}

SuffStats ingest(SuffStats stats, const Vec& z, const Vec& x, double y) {
    stats.ingest(z, x, y);
    return stats;
}

Estimates estimate_with_first_stage(const SuffStats& stats, const Mat& gamma_hat) {
    const int k = stats.k();
    const int d = stats.d();
    Estimates e;
    e.t = stats.t;
    e.U = stats.U;
    e.gamma_x = stats.gamma_x;
    e.gamma_hat = gamma_hat;
    // X-hat' X-hat = Gamma' (sum z z') Gamma and X-hat' Y = Gamma' zy.
    const Mat gram_z = stats.U - stats.gamma_z * Mat::Identity(k, k);
    e.W = stats.gamma_x * Mat::Identity(d, d) + gamma_hat.transpose() * gram_z * gamma_hat;
    e.W = 0.5 * (e.W + e.W.transpose());
    e.Q = gamma_hat.transpose() * stats.zy;
    e.beta_hat = spd_solve(e.W, e.Q, "W");
    e.delta_hat = spd_solve(stats.U, stats.zy, "U");
    return e;
}

Estimates estimate(const SuffStats& stats) {
    const auto u_factor = spd_factor(stats.U, "U");
    const Mat gamma_hat = u_factor.solve(stats.V);
    return estimate_with_first_stage(stats, gamma_hat);
}

Estimates batch_tsls(const Mat& Z, const Mat& X, const Vec& Y, double gamma_z, double gamma_x) {
    if (Z.rows() < 1) throw DataError("batch_tsls: need at least one row");
    if (X.rows() != Z.rows() || Y.size() != Z.rows()) throw DataError("batch_tsls: ragged inputs");
    if (gamma_z < 0 || gamma_x < 0) throw ConfigError("batch_tsls: ridge parameters must be nonnegative");
    const Index k = Z.cols();
    const Index d = X.cols();

    Estimates e;
    e.t = Z.rows();
    e.gamma_x = gamma_x;
    e.U = gamma_z * Mat::Identity(k, k) + Z.transpose() * Z;
    const auto u_factor = spd_factor(e.U, "gamma_z I + Z'Z");
    e.gamma_hat = u_factor.solve(Z.transpose() * X);
    const Mat x_hat = Z * e.gamma_hat;
    e.W = gamma_x * Mat::Identity(d, d) + x_hat.transpose() * x_hat;
    e.Q = x_hat.transpose() * Y;
    e.beta_hat = spd_solve(e.W, e.Q, "gamma_x I + Xhat'Xhat");
    e.delta_hat = u_factor.solve(Z.transpose() * Y);
    return e;
}

RidgeStats::RidgeStats(int d, double gamma_) : M(gamma_ * Mat::Identity(d, d)), xy(Vec::Zero(d)), gamma(gamma_) {
    if (!(gamma_ > 0)) throw ConfigError("ridge parameter must be positive");
}

void RidgeStats::ingest(const Vec& x, double y) {
    if (x.size() != M.rows()) throw DataError("ridge ingest: dimension mismatch");
    if (!x.allFinite() || !std::isfinite(y)) throw DataError("ridge ingest: non-finite observation");
    M.noalias() += x * x.transpose();
    xy.noalias() += x * y;
    ++t;
}

Vec RidgeStats::beta_hat() const { return spd_solve(M, xy, "ridge Gram matrix"); }

}  // namespace banditiv
