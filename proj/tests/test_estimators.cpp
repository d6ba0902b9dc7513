#include <doctest.h>

#include "banditiv/estimators.hpp"
#include "banditiv/linalg.hpp"
#include "helpers.hpp"

using namespace banditiv;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

// Plain textbook ridge TSLS from the stacked data, independent of the library.
void oracle_tsls(const Mat& Z, const Mat& X, const Vec& Y, double gz, double gx, Mat& gamma, Vec& beta, Vec& delta) {
    const Index k = Z.cols(), d = X.cols();
    const Mat a = gz * Mat::Identity(k, k) + Z.transpose() * Z;
    gamma = a.inverse() * Z.transpose() * X;
    const Mat xh = Z * gamma;
    beta = (gx * Mat::Identity(d, d) + xh.transpose() * xh).inverse() * xh.transpose() * Y;
    delta = a.inverse() * Z.transpose() * Y;
}

}  // namespace

TEST_CASE("init_stats") {
    auto s = init_stats(2, 1, 1.0, 1.0);
    CHECK(s.U.isApprox(Mat::Identity(2, 2)));
    CHECK(s.V.isZero());
    CHECK(s.t == 0);
    s = init_stats(1, 1, 0.5, 1.0);
    CHECK(s.U(0, 0) == 0.5);
    CHECK_THROWS_AS(init_stats(2, 1, 0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(init_stats(2, 1, 1.0, -1.0), ConfigError);
}

TEST_CASE("ingest examples") {
    auto s = init_stats(2, 1);
    const auto before = s;
    s.ingest(Vec::Zero(2), Vec::Zero(1), 0.0);
    CHECK(s.t == 1);
    CHECK(s.U.isApprox(before.U));
    CHECK(s.V.isZero());
    CHECK(s.zy.isZero());

    auto one = init_stats(1, 1, 1.0, 1.0);
    one.ingest(v1(1), v1(2), 4);
    CHECK(one.U(0, 0) - one.gamma_z == doctest::Approx(1.0));
    CHECK(one.V(0, 0) == doctest::Approx(2.0));
    CHECK(one.zy(0) == doctest::Approx(4.0));

    std::mt19937_64 g(1);
    const Vec za = testutil::random_vec(g, 3), zb = testutil::random_vec(g, 3);
    const Vec xa = testutil::random_vec(g, 2), xb = testutil::random_vec(g, 2);
    const auto ab = ingest(ingest(init_stats(3, 2), za, xa, 1.5), zb, xb, -0.5);
    const auto ba = ingest(ingest(init_stats(3, 2), zb, xb, -0.5), za, xa, 1.5);
    CHECK(ab.U.isApprox(ba.U));
    CHECK(ab.V.isApprox(ba.V));
    CHECK(ab.zy.isApprox(ba.zy));

    CHECK_THROWS_AS(s.ingest(Vec::Zero(3), Vec::Zero(1), 0.0), DataError);
    CHECK_THROWS_AS(s.ingest(Vec::Zero(2), Vec::Zero(1), std::nan("")), DataError);
}

TEST_CASE("estimate with no data is zero") {
    const auto e = estimate(init_stats(3, 2));
    CHECK(e.gamma_hat.isZero());
    CHECK(e.beta_hat.isZero());
    CHECK(e.delta_hat.isZero());
}

TEST_CASE("single observation, vanishing ridge") {
    auto s = init_stats(1, 1, 1e-10, 1e-10);
    s.ingest(v1(1), v1(2), 4);
    const auto e = estimate(s);
    CHECK(e.gamma_hat(0, 0) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(e.beta_hat(0) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(e.delta_hat(0) == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(e.delta_hat(0) == doctest::Approx(e.gamma_hat(0, 0) * e.beta_hat(0)).epsilon(1e-8));

    const auto b = batch_tsls(Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 2.0), v1(4), 0.0, 0.0);
    CHECK(b.beta_hat(0) == doctest::Approx(2.0));
}

TEST_CASE("noiseless stream recovers beta0") {
    std::mt19937_64 g(11);
    for (int k : {1, 2, 3}) {
        const Mat gamma0 = testutil::random_mat(g, k, k) + 2.0 * Mat::Identity(k, k);
        const Vec beta0 = testutil::random_vec(g, k);
        auto s = init_stats(k, k, 1e-8, 1e-8);
        for (int t = 0; t < 20; ++t) {
            const Vec z = testutil::random_vec(g, k);
            const Vec x = gamma0.transpose() * z;
            s.ingest(z, x, x.dot(beta0));
        }
        CHECK((estimate(s).beta_hat - beta0).norm() < 1e-4);
    }
}

TEST_CASE("online estimate matches an independent batch oracle") {
    std::mt19937_64 g(5);
    std::uniform_int_distribution<int> kd(1, 5);
    for (int rep = 0; rep < 30; ++rep) {
        const int k = kd(g);
        const int d = std::uniform_int_distribution<int>(1, std::min(k, 3))(g);
        const int t = std::uniform_int_distribution<int>(1, 100)(g);
        const Mat Z = testutil::random_mat(g, t, k);
        const Mat X = Z * testutil::random_mat(g, k, d) + testutil::random_mat(g, t, d, 0.5);
        const Vec Y = X * testutil::random_vec(g, d) + testutil::random_vec(g, t);
        auto s = init_stats(k, d, 0.7, 1.3);
        for (int i = 0; i < t; ++i) s.ingest(Z.row(i).transpose(), X.row(i).transpose(), Y(i));
        const auto e = estimate(s);
        Mat og;
        Vec ob, od;
        oracle_tsls(Z, X, Y, 0.7, 1.3, og, ob, od);
        CHECK(testutil::max_rel_err(e.gamma_hat, og) < 1e-8);
        CHECK(testutil::max_rel_err(e.beta_hat, ob) < 1e-8);
        CHECK(testutil::max_rel_err(e.delta_hat, od) < 1e-8);
        const auto b = batch_tsls(Z, X, Y, 0.7, 1.3);
        CHECK(testutil::max_rel_err(e.beta_hat, b.beta_hat) < 1e-8);
        // W stays positive definite above the ridge floor.
        CHECK(min_eigenvalue(e.W) >= 1.3 - 1e-10);
    }
}

TEST_CASE("just-identified zero-ridge identity") {
    std::mt19937_64 g(9);
    for (int k : {1, 2, 3}) {
        const Mat Z = testutil::random_mat(g, 40, k);
        const Mat X = Z * (testutil::random_mat(g, k, k) + 2.0 * Mat::Identity(k, k)) + testutil::random_mat(g, 40, k);
        const Vec Y = testutil::random_vec(g, 40);
        const auto e = batch_tsls(Z, X, Y, 0.0, 0.0);
        CHECK(testutil::max_rel_err(e.delta_hat, e.gamma_hat * e.beta_hat) < 1e-8);
    }
}

TEST_CASE("batch_tsls rejects ragged input") {
    CHECK_THROWS_AS(batch_tsls(Mat::Ones(3, 1), Mat::Ones(2, 1), Vec::Ones(3), 1, 1), DataError);
}

TEST_CASE("estimate_with_first_stage keeps the supplied Gamma") {
    std::mt19937_64 g(2);
    auto s = init_stats(3, 2);
    for (int i = 0; i < 30; ++i) s.ingest(testutil::random_vec(g, 3), testutil::random_vec(g, 2), 1.0);
    const Mat fixed = testutil::random_mat(g, 3, 2);
    const auto e = estimate_with_first_stage(s, fixed);
    CHECK(e.gamma_hat.isApprox(fixed));
    const Mat w = s.gamma_x * Mat::Identity(2, 2) + fixed.transpose() * (s.U - s.gamma_z * Mat::Identity(3, 3)) * fixed;
    CHECK(e.beta_hat.isApprox(w.inverse() * fixed.transpose() * s.zy, 1e-10));
}

TEST_CASE("ridge OLS and TSLS agree under exogeneity") {
    std::mt19937_64 g(4);
    std::uniform_real_distribution<double> u(-3, 3);
    std::normal_distribution<double> n(0, 1);
    auto s = init_stats(1, 1);
    RidgeStats r(1, 1.0);
    for (int t = 0; t < 5000; ++t) {
        const double z = u(g);
        const double x = z + n(g) + 0.1 * n(g);
        const double y = x + n(g);
        s.ingest(v1(z), v1(x), y);
        r.ingest(v1(x), y);
    }
    CHECK(std::abs(estimate(s).beta_hat(0) - 1.0) < 0.05);
    CHECK(std::abs(r.beta_hat()(0) - 1.0) < 0.05);
}
