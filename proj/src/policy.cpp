#include "banditiv/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "banditiv/linalg.hpp"

namespace banditiv {

void ConfidenceConfig::check() const {
    if (!(delta_conf > 0 && delta_conf < 1)) throw ConfigError("delta_conf must lie in (0, 1)");
    if (horizon < 1) throw ConfigError("confidence horizon must be >= 1");
    if (!(S_beta > 0 && S_gamma > 0 && L_x > 0 && L_y > 0)) throw ConfigError("confidence bounds must be positive");
    if (!(gamma_z > 0 && gamma_x > 0)) throw ConfigError("ridge parameters must be positive");
}

ConfidenceConfig make_confidence_config(const BoundsConfig& bounds, int horizon, double delta_conf, double gamma_z,
                                        double gamma_x) {
    ConfidenceConfig c;
    c.delta_conf = delta_conf;
    c.horizon = horizon;
    c.S_beta = bounds.S_beta;
    c.S_gamma = bounds.S_gamma;
    c.L_x = bounds.L_x;
    c.L_y = bounds.L_y;
    c.gamma_z = gamma_z;
    c.gamma_x = gamma_x;
    c.check();
    return c;
}

EpsilonSchedule EpsilonSchedule::explicit_list(std::vector<double> values) {
    if (values.empty()) throw ConfigError("explicit epsilon schedule must not be empty");
    for (double& v : values) {
        if (!std::isfinite(v)) throw ConfigError("epsilon schedule entries must be finite");
        v = std::clamp(v, 0.0, 1.0);
    }
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[i - 1]) throw ConfigError("epsilon schedule must be nonincreasing");
    }
    return EpsilonSchedule(Kind::explicit_list, std::move(values));
}

EpsilonSchedule EpsilonSchedule::parse(const std::string& name) {
    if (name == "zero") return zero();
    if (name == "sqrt") return sqrt_log();
    throw ConfigError("unknown epsilon schedule '" + name + "' (expected zero or sqrt)");
}

double EpsilonSchedule::at(long t) const {
    switch (kind_) {
        case Kind::zero:
            return 0.0;
        case Kind::sqrt_log_t_over_t: {
            const double s = static_cast<double>(std::max(t, 1L)) + 2.0;
            return std::min(1.0, std::sqrt(std::log(s) / s));
        }
        case Kind::explicit_list: {
            const auto i = static_cast<std::size_t>(std::max(t - 1, 0L));
            return values_[std::min(i, values_.size() - 1)];
        }
    }
    return 0.0;
}

std::string EpsilonSchedule::name() const {
    switch (kind_) {
        case Kind::zero:
            return "zero";
        case Kind::sqrt_log_t_over_t:
            return "sqrt";
        case Kind::explicit_list:
            return "explicit";
    }
    return "unknown";
}

namespace {

double radical(double delta, int horizon, int dim, double cap) {
    const double T = static_cast<double>(horizon);
    const double n = static_cast<double>(dim);
    const double r = 2.0 * std::log(2.0 * T / delta) + n * std::log(5.0 * T * cap * cap / n);
    return std::sqrt(std::max(r, 0.0));
}

}  // namespace

double width_B(const ConfidenceConfig& cfg, int d, long t_round) {
    if (t_round < 1) throw ConfigError("width_B: t_round must be >= 1");
    return std::sqrt(cfg.gamma_x) * cfg.S_beta + radical(cfg.delta_conf, cfg.horizon, d, cfg.L_x);
}

double width_G(const ConfidenceConfig& cfg, int k, long t_round) {
    if (t_round < 1) throw ConfigError("width_G: t_round must be >= 1");
    return std::sqrt(cfg.gamma_z) * cfg.S_gamma + radical(cfg.delta_conf, cfg.horizon, k, cfg.L_y);
}

Widths widths(const ConfidenceConfig& cfg, int k, int d, long t_round) {
    return Widths{width_B(cfg, d, t_round), width_G(cfg, k, t_round)};
}

Vec optimistic_scores(const Mat& instruments, const Estimates& est, const Widths& w) {
    const Index n = instruments.rows();
    const double d = static_cast<double>(est.beta_hat.size());
    const Mat x_hat = instruments * est.gamma_hat;  // n x d
    Vec scores = x_hat * est.beta_hat;
    if (w.B == 0.0 && w.G == 0.0) return scores;

    const auto w_factor = spd_factor(est.W, "W");
    const auto u_factor = spd_factor(est.U, "U");
    const Mat xw = w_factor.matrixL().solve(x_hat.transpose());
    const Mat zu = u_factor.matrixL().solve(instruments.transpose());
    const double beta_radius = est.beta_hat.norm() + w.B / std::sqrt(est.gamma_x);
    for (Index a = 0; a < n; ++a) {
        scores(a) += w.B * xw.col(a).norm() + std::sqrt(d) * w.G * zu.col(a).norm() * beta_radius;
    }
    return scores;
}

double optimistic_score(const Vec& z, const Estimates& est, const Widths& w) {
    return optimistic_scores(z.transpose(), est, w)(0);
}

int argmax_lowest(const Vec& values) {
    if (values.size() == 0) throw EnvironmentError("argmax over an empty arm set");
    int best = 0;
    for (Index a = 1; a < values.size(); ++a) {
        if (values(a) > values(best)) best = static_cast<int>(a);
    }
    return best;
}

int random_arm(const Round& round, Rng& rng) {
    if (round.n_arms() < 1) throw EnvironmentError("round has no arms");
    return std::uniform_int_distribution<int>(0, round.n_arms() - 1)(rng);
}

ArmChoice select_arm(const Round& round, const Estimates& est, const Widths& w, double eps_t, Rng& rng) {
    if (round.n_arms() < 1) throw EnvironmentError("round has no arms");
    const double coin = uniform01(rng);
    if (coin < eps_t) {
        const int arm = random_arm(round, rng);
        return ArmChoice{arm, true, optimistic_score(round.instruments.row(arm).transpose(), est, w)};
    }
    const Vec scores = optimistic_scores(round.instruments, est, w);
    const int arm = argmax_lowest(scores);
    return ArmChoice{arm, false, scores(arm)};
}

double oful_width(const BaselineConfig& cfg, int d, long t) {
    const double n = static_cast<double>(d);
    const double r = 2.0 * std::log(1.0 / cfg.delta_conf) +
                     n * std::log(1.0 + static_cast<double>(t) * cfg.L_x * cfg.L_x / (cfg.gamma * n));
    return std::sqrt(cfg.gamma) * cfg.S_beta + cfg.noise_scale * std::sqrt(std::max(r, 0.0));
}

Vec oful_scores(const Round& round, const RidgeStats& state, double width) {
    const auto factor = spd_factor(state.M, "ridge Gram matrix");
    const Vec beta = factor.solve(state.xy);
    Vec scores = round.features * beta;
    if (width != 0.0) {
        const Mat xm = factor.matrixL().solve(round.features.transpose());
        for (Index a = 0; a < scores.size(); ++a) scores(a) += width * xm.col(a).norm();
    }
    return scores;
}

int select_oful(const Round& round, const RidgeStats& state, long t_round, const BaselineConfig& cfg) {
    if (round.n_arms() < 1) throw EnvironmentError("round has no arms");
    const int d = static_cast<int>(state.M.rows());
    return argmax_lowest(oful_scores(round, state, oful_width(cfg, d, t_round)));
}

Vec sample_ts_parameter(const RidgeStats& state, double scale, Rng& rng) {
    const auto factor = spd_factor(state.M, "ridge Gram matrix");
    const Vec beta = factor.solve(state.xy);
    if (scale == 0.0) return beta;
    Vec xi(beta.size());
    for (Index i = 0; i < xi.size(); ++i) xi(i) = standard_normal(rng);
    // M = L L'  =>  L'^{-1} xi has covariance M^{-1}.
    const Vec offset = factor.matrixU().solve(xi);
    return beta + scale * offset;
}

int select_ts(const Round& round, const RidgeStats& state, const BaselineConfig& cfg, Rng& rng) {
    if (round.n_arms() < 1) throw EnvironmentError("round has no arms");
    const Vec theta = sample_ts_parameter(state, cfg.ts_scale, rng);
    return argmax_lowest(round.features * theta);
}

}  // namespace banditiv
