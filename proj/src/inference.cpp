#include "banditiv/inference.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "banditiv/linalg.hpp"

namespace banditiv {

void RunRecord::check() const {
    const Index t = Y.size();
    if (Z.rows() != t || X.rows() != t || deltafit.rows() != t) {
        throw DataError("run record: per-round sequences have different lengths");
    }
    if (deltafit.cols() != Z.cols()) throw DataError("run record: deltafit width must equal k");
}

Vec residuals(const RunRecord& rec) {
    rec.check();
    return rec.Y - (rec.Z.cwiseProduct(rec.deltafit)).rowwise().sum();
}

VarianceEstimate variance_estimate(const RunRecord& rec) {
    rec.check();
    const long t = rec.t();
    if (t < 1) throw InferenceError("variance_estimate: empty run record");
    const Vec v = residuals(rec);
    const double sum_v2 = v.squaredNorm();
    const Mat szz = rec.Z.transpose() * rec.Z;
    const Mat middle = rec.gamma_hat.transpose() * szz * rec.gamma_hat;
    Mat inner = middle;
    if (t < rec.k()) inner += rec.gamma_x * Mat::Identity(inner.rows(), inner.cols());

    Eigen::LLT<Mat> llt(inner);
    if (llt.info() != Eigen::Success || min_eigenvalue(inner) <= 1e-12 * std::max(1.0, inner.norm())) {
        throw InferenceError("variance_estimate: Gamma_hat' Szz Gamma_hat is singular; run more rounds");
    }
    const Mat inner_inv = llt.solve(Mat::Identity(inner.rows(), inner.cols()));
    Mat s = sum_v2 * (inner_inv * middle * inner_inv);
    s = 0.5 * (s + s.transpose());
    return VarianceEstimate{s, t};
}

std::vector<Interval> asymptotic_ci(const Vec& beta_hat, const VarianceEstimate& s, long t, double alpha) {
    if (t < 1) throw InferenceError("asymptotic_ci: t must be >= 1");
    if (!(alpha > 0 && alpha < 1)) throw ConfigError("asymptotic_ci: alpha must lie in (0, 1)");
    if (s.S_hat.rows() != beta_hat.size()) throw InferenceError("asymptotic_ci: dimension mismatch");
    const double q = normal_quantile(1.0 - alpha / 2.0);
    std::vector<Interval> out;
    for (Index i = 0; i < beta_hat.size(); ++i) {
        double var = s.S_hat(i, i);
        if (var < 0) {
            std::clog << "warning: negative variance diagonal " << var << " clamped to 0\n";
            var = 0;
        }
        const double half = q * std::sqrt(var / static_cast<double>(t));
        out.push_back(Interval{beta_hat(i) - half, beta_hat(i) + half, false});
    }
    return out;
}

void RerandConfig::check() const {
    if (n_resamples < 1) throw ConfigError("rerand: N_H must be >= 1");
    if (!(alpha > 0 && alpha < 1)) throw ConfigError("rerand: alpha must lie in (0, 1)");
}

ReplayMechanism::ReplayMechanism(std::vector<Round> rounds, EpsilonSchedule schedule, Widths widths)
    : rounds_(std::move(rounds)), schedule_(std::move(schedule)), widths_(widths) {}

ReplayMechanism::Path ReplayMechanism::replay(const RunRecord& rec, const Vec& tau, Rng& rng) const {
    const long t_total = rec.t();
    if (static_cast<long>(rounds_.size()) < t_total) {
        throw InferenceError("replay: mechanism holds fewer rounds than the record");
    }
    if (tau.size() != rec.d()) throw InferenceError("replay: tau has the wrong dimension");
    const int k = rec.k();
    const int d = rec.d();

    Path path{Mat(t_total, k), Mat(t_total, d), Vec(t_total)};
    SuffStats stats = init_stats(k, d, rec.gamma_z, rec.gamma_x);
    for (long t = 0; t < t_total; ++t) {
        const Round& round = rounds_[static_cast<std::size_t>(t)];
        if (round.instruments.cols() != k || round.features.cols() != d) {
            throw InferenceError("replay: recorded round has inconsistent dimensions");
        }
        int arm = 0;
        if (t == 0) {
            arm = random_arm(round, rng);
        } else {
            const Estimates est = estimate_with_first_stage(stats, rec.gamma_hat);
            arm = select_arm(round, est, widths_, schedule_.at(t), rng).arm;
        }
        const Vec z = round.instruments.row(arm).transpose();
        const Vec x = round.features.row(arm).transpose();
        const double y = rec.Y(t) + tau.dot(x - rec.X.row(t).transpose());
        path.Z.row(t) = z.transpose();
        path.X.row(t) = x.transpose();
        path.Y(t) = y;
        stats.ingest(z, x, y);
    }
    return path;
}

Vec rerand_statistic(const ReplayMechanism::Path& path, const Mat& gamma_hat, double gamma) {
    const Mat x_hat = path.Z * gamma_hat;
    const Index d = gamma_hat.cols();
    const Mat gram = gamma * Mat::Identity(d, d) + x_hat.transpose() * x_hat;
    return spd_solve(gram, x_hat.transpose() * path.Y, "rerand Gram matrix");
}

RerandResult rerand_test(const RunRecord& rec, const Vec& tau, const RerandConfig& cfg,
                         const ReplayMechanism& mechanism, std::uint64_t seed) {
    cfg.check();
    rec.check();
    const Index d = rec.d();
    Vec exceed = Vec::Zero(d);
    for (int i = 0; i < cfg.n_resamples; ++i) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
        const auto path = mechanism.replay(rec, tau, rng);
        const Vec tau_hat = rerand_statistic(path, rec.gamma_hat, rec.gamma_x);
        for (Index j = 0; j < d; ++j) {
            if (std::abs(tau_hat(j)) > std::abs(rec.beta_hat(j))) exceed(j) += 1.0;
        }
    }
    RerandResult out;
    out.p_values = exceed / static_cast<double>(cfg.n_resamples);
    for (Index j = 0; j < d; ++j) out.reject.push_back(out.p_values(j) < cfg.alpha);
    return out;
}

RerandInterval rerand_ci(const RunRecord& rec, const RerandConfig& cfg, const ReplayMechanism& mechanism,
                         std::uint64_t seed) {
    cfg.check();
    if (cfg.tau_grid.empty()) throw ConfigError("rerand_ci: tau grid is empty");
    const Index d = rec.d();
    std::vector<double> lo(static_cast<std::size_t>(d), std::numeric_limits<double>::infinity());
    std::vector<double> hi(static_cast<std::size_t>(d), -std::numeric_limits<double>::infinity());
    for (const Vec& tau : cfg.tau_grid) {
        const auto res = rerand_test(rec, tau, cfg, mechanism, seed);
        for (Index j = 0; j < d; ++j) {
            if (res.reject[static_cast<std::size_t>(j)]) continue;
            lo[static_cast<std::size_t>(j)] = std::min(lo[static_cast<std::size_t>(j)], tau(j));
            hi[static_cast<std::size_t>(j)] = std::max(hi[static_cast<std::size_t>(j)], tau(j));
        }
    }
    RerandInterval out;
    for (Index j = 0; j < d; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (lo[sj] > hi[sj]) {
            out.intervals.push_back(Interval{std::nan(""), std::nan(""), true});
            std::ostringstream os;
            os << "dimension " << j << ": every grid value was rejected; widen the grid";
            out.diagnostics.push_back(os.str());
        } else {
            out.intervals.push_back(Interval{lo[sj], hi[sj], false});
            double gmin = cfg.tau_grid.front()(j), gmax = gmin;
            for (const Vec& tau : cfg.tau_grid) {
                gmin = std::min(gmin, tau(j));
                gmax = std::max(gmax, tau(j));
            }
            if (lo[sj] == gmin || hi[sj] == gmax) {
                std::ostringstream os;
                os << "dimension " << j << ": interval reaches the edge of the tau grid; it may be truncated";
                out.diagnostics.push_back(os.str());
            }
        }
    }
    return out;
}

std::vector<Vec> default_tau_grid(const Vec& beta_hat, const Vec& half_width, int n, double span) {
    if (n < 1) throw ConfigError("tau grid needs at least one point");
    std::vector<Vec> grid;
    for (int g = 0; g < n; ++g) {
        const double s = n == 1 ? 0.0 : -span + 2.0 * span * static_cast<double>(g) / static_cast<double>(n - 1);
        grid.push_back(beta_hat + s * half_width);
    }
    return grid;
}

}  // namespace banditiv
