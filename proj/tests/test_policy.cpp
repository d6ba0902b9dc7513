#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "banditiv/policy.hpp"
#include "helpers.hpp"

using namespace banditiv;

namespace {

ConfidenceConfig unit_conf() {
    ConfidenceConfig c;
    c.delta_conf = 0.1;
    c.horizon = 1;
    c.S_beta = c.S_gamma = 1.0;
    c.L_x = c.L_y = 1.0;
    return c;
}

Mat inv_sqrt(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Vec unit_ball_point(std::mt19937_64& g, int n) {
    Vec v = testutil::random_vec(g, n);
    const double r = std::pow(std::uniform_real_distribution<double>(0, 1)(g), 1.0 / n);
    return r * v / v.norm();
}

Estimates random_estimates(std::mt19937_64& g, int k, int d, int t) {
    auto s = init_stats(k, d);
    const Mat gamma0 = testutil::random_mat(g, k, d) + Mat::Identity(k, d);
    for (int i = 0; i < t; ++i) {
        const Vec z = testutil::random_vec(g, k);
        const Vec x = gamma0.transpose() * z + testutil::random_vec(g, d);
        s.ingest(z, x, x.sum() + testutil::random_vec(g, 1)(0));
    }
    return estimate(s);
}

Round round_from_instruments(const Mat& z, int d) {
    Round r;
    r.instruments = z;
    r.features = Mat::Zero(z.rows(), d);
    r.rewards = Vec::Zero(z.rows());
    return r;
}

}  // namespace

TEST_CASE("width formula at T=1") {
    const auto c = unit_conf();
    const double oracle = 1.0 + std::sqrt(2.0 * std::log(20.0) + std::log(5.0));
    CHECK(width_B(c, 1, 1) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(width_G(c, 1, 1) == doctest::Approx(oracle).epsilon(1e-12));
    // Rounded to three decimals the same expression reads 3.757.
    CHECK(oracle == doctest::Approx(3.757).epsilon(1e-3));
}

TEST_CASE("width monotonicity and limits") {
    auto c = unit_conf();
    c.horizon = 100;
    const double b100 = width_B(c, 2, 1);
    c.horizon = 200;
    CHECK(width_B(c, 2, 1) > b100);

    c = unit_conf();
    c.delta_conf = 1.0 - 1e-12;
    const double near_one = width_B(c, 1, 1) - 1.0;
    CHECK(near_one * near_one == doctest::Approx(2.0 * std::log(2.0) + std::log(5.0)).epsilon(1e-9));

    c = unit_conf();
    c.horizon = 50;
    c.L_y = std::exp(1.0);
    CHECK(width_G(c, 2, 1) > width_G(c, 1, 1));

    c = unit_conf();
    c.horizon = 50;
    c.S_gamma = 1e-300;
    c.gamma_z = 1e-300;
    const double pure = std::sqrt(2.0 * std::log(2.0 * 50 / 0.1) + std::log(5.0 * 50));
    CHECK(width_G(c, 1, 1) == doctest::Approx(pure).epsilon(1e-12));
}

TEST_CASE("optimistic score trivial cases") {
    std::mt19937_64 g(1);
    const auto est = random_estimates(g, 3, 2, 20);
    CHECK(optimistic_score(Vec::Zero(3), est, Widths{2.0, 3.0}) == doctest::Approx(0.0));
    const Vec z = testutil::random_vec(g, 3);
    CHECK(optimistic_score(z, est, Widths{0, 0}) == doctest::Approx((est.gamma_hat.transpose() * z).dot(est.beta_hat)));
}

TEST_CASE("optimistic score upper-bounds the bilinear objective on the ellipsoids") {
    std::mt19937_64 g(17);
    for (int inst = 0; inst < 10; ++inst) {
        const int k = 1 + inst % 4;
        const int d = 1 + inst % std::min(k, 3);
        const auto est = random_estimates(g, k, d, 15);
        const Widths w{0.5 + inst * 0.1, 0.3 + inst * 0.05};
        const Mat u_half = inv_sqrt(est.U);
        const Mat w_half = inv_sqrt(est.W);
        const Vec z = testutil::random_vec(g, k);
        const double score = optimistic_score(z, est, w);
        double worst_gap = 1e300;
        for (int probe = 0; probe < 1000; ++probe) {
            Mat gamma = est.gamma_hat;
            for (int i = 0; i < d; ++i) gamma.col(i) += w.G * u_half * unit_ball_point(g, k);
            const Vec beta = est.beta_hat + w.B * w_half * unit_ball_point(g, d);
            worst_gap = std::min(worst_gap, score - (gamma.transpose() * z).dot(beta));
        }
        CHECK(worst_gap >= -1e-10);
    }
}

TEST_CASE("select_arm singleton, ties and determinism") {
    std::mt19937_64 g(3);
    const auto est = random_estimates(g, 2, 1, 10);
    Rng rng(1);
    const auto one = round_from_instruments(testutil::random_mat(g, 1, 2), 1);
    CHECK(select_arm(one, est, Widths{1, 1}, 0.0, rng).arm == 0);

    const Mat same = testutil::random_mat(g, 1, 2).replicate(2, 1);
    CHECK(select_arm(round_from_instruments(same, 1), est, Widths{1, 1}, 0.0, rng).arm == 0);

    const auto many = round_from_instruments(testutil::random_mat(g, 8, 2), 1);
    Rng a(9), b(42);
    CHECK(select_arm(many, est, Widths{1, 1}, 0.0, a).arm == select_arm(many, est, Widths{1, 1}, 0.0, b).arm);
    CHECK_THROWS_AS(select_arm(round_from_instruments(Mat(0, 2), 1), est, Widths{1, 1}, 0.0, a), EnvironmentError);
}

TEST_CASE("eps=1 explores uniformly") {
    std::mt19937_64 g(5);
    const auto est = random_estimates(g, 2, 1, 10);
    const auto round = round_from_instruments(testutil::random_mat(g, 5, 2), 1);
    Rng rng(123);
    std::vector<double> counts(5, 0.0);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto c = select_arm(round, est, Widths{1, 1}, 1.0, rng);
        CHECK(c.explored);
        counts[static_cast<std::size_t>(c.arm)] += 1;
    }
    double chi2 = 0;
    for (double c : counts) chi2 += (c - n / 5.0) * (c - n / 5.0) / (n / 5.0);
    const boost::math::chi_squared dist(4);
    CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.01);
}

TEST_CASE("argmax is invariant to a shared positive scale") {
    std::mt19937_64 g(8);
    auto est = random_estimates(g, 3, 2, 25);
    const auto round = round_from_instruments(testutil::random_mat(g, 20, 3), 2);
    const Widths w{1.2, 0.7};
    Rng r1(1), r2(1);
    const int base = select_arm(round, est, w, 0.0, r1).arm;
    est.beta_hat *= 3.5;
    CHECK(select_arm(round, est, Widths{w.B * 3.5, w.G}, 0.0, r2).arm == base);
}

TEST_CASE("epsilon schedules") {
    const auto s = EpsilonSchedule::sqrt_log();
    CHECK(s.at(1) == doctest::Approx(std::sqrt(std::log(3.0) / 3.0)));
    CHECK(s.at(998) == doctest::Approx(std::sqrt(std::log(1000.0) / 1000.0)));
    CHECK(EpsilonSchedule::zero().at(5) == 0.0);
    const auto e = EpsilonSchedule::explicit_list({1.5, 0.4, 0.1});
    CHECK(e.at(1) == 1.0);
    CHECK(e.at(3) == 0.1);
    CHECK(e.at(100) == 0.1);
    CHECK_THROWS_AS(EpsilonSchedule::explicit_list({0.1, 0.2}), ConfigError);
    CHECK_THROWS_AS(EpsilonSchedule::parse("linear"), ConfigError);
}

TEST_CASE("OFUL collapses to greedy ridge with zero width") {
    std::mt19937_64 g(6);
    RidgeStats st(2, 1.0);
    for (int i = 0; i < 30; ++i) st.ingest(testutil::random_vec(g, 2), testutil::random_vec(g, 1)(0));
    Round r;
    r.features = testutil::random_mat(g, 10, 2);
    r.instruments = Mat::Zero(10, 1);
    r.rewards = Vec::Zero(10);
    const Vec greedy = r.features * (st.M.inverse() * st.xy);
    Index best;
    greedy.maxCoeff(&best);
    CHECK(argmax_lowest(oful_scores(r, st, 0.0)) == best);

    Round single = r;
    single.features = r.features.topRows(1);
    single.instruments = Mat::Zero(1, 1);
    BaselineConfig cfg;
    CHECK(select_oful(single, st, 5, cfg) == 0);
}

TEST_CASE("OFUL radius") {
    BaselineConfig c;
    c.S_beta = 2.0;
    c.L_x = 3.0;
    const double oracle = 2.0 + std::sqrt(2.0 * std::log(10.0) + 2.0 * std::log(1.0 + 100.0 * 9.0 / 2.0));
    CHECK(oful_width(c, 2, 100) == doctest::Approx(oracle));
}

TEST_CASE("Thompson sampling with zero scale is greedy") {
    std::mt19937_64 g(12);
    RidgeStats st(2, 1.0);
    for (int i = 0; i < 30; ++i) st.ingest(testutil::random_vec(g, 2), testutil::random_vec(g, 1)(0));
    Round r;
    r.features = testutil::random_mat(g, 6, 2);
    r.instruments = Mat::Zero(6, 1);
    r.rewards = Vec::Zero(6);
    BaselineConfig cfg;
    cfg.ts_scale = 0.0;
    Rng rng(1);
    Index best;
    (r.features * (st.M.inverse() * st.xy)).maxCoeff(&best);
    CHECK(select_ts(r, st, cfg, rng) == best);
}

TEST_CASE("Thompson selection frequencies match a brute-force posterior sampler") {
    RidgeStats st(2, 1.0);
    std::mt19937_64 g(21);
    for (int i = 0; i < 8; ++i) {
        const Vec x = testutil::random_vec(g, 2);
        st.ingest(x, x(0) - 0.5 * x(1) + testutil::random_vec(g, 1, 0.5)(0));
    }
    Round r;
    r.features.resize(3, 2);
    r.features << 1.0, 0.0, 0.0, 1.0, 0.7, 0.7;
    r.instruments = Mat::Zero(3, 1);
    r.rewards = Vec::Zero(3);
    BaselineConfig cfg;

    const int n = 10000;
    std::vector<double> lib(3, 0.0), oracle(3, 0.0);
    Rng rng(77);
    for (int i = 0; i < n; ++i) lib[static_cast<std::size_t>(select_ts(r, st, cfg, rng))] += 1.0 / n;

    // Oracle: explicit covariance M^{-1} and its symmetric square root.
    const Mat cov = st.M.inverse();
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    const Mat root = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    const Vec mean = cov * st.xy;
    std::mt19937_64 og(999);
    for (int i = 0; i < n; ++i) {
        const Vec theta = mean + root * testutil::random_vec(og, 2);
        Index a;
        (r.features * theta).maxCoeff(&a);
        oracle[static_cast<std::size_t>(a)] += 1.0 / n;
    }
    for (int a = 0; a < 3; ++a) CHECK(std::abs(lib[a] - oracle[a]) < 0.02);
}
