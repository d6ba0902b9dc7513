#include <doctest.h>

#include <algorithm>

#include "banditiv/envs.hpp"
#include "banditiv/model.hpp"
#include "helpers.hpp"

using namespace banditiv;

namespace {

bool mentions(const std::vector<std::string>& msgs, const std::string& needle) {
    return std::any_of(msgs.begin(), msgs.end(), [&](const std::string& m) { return m.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("mean_reward examples") {
    CHECK(mean_reward(Vec::Zero(3), Mat::Ones(3, 2), Vec::Ones(2)) == 0.0);
    CHECK(mean_reward(Vec::Constant(1, 2.0), Mat::Constant(1, 1, 3.0), Vec::Ones(1)) == doctest::Approx(6.0));
    CHECK(mean_reward(Vec::Ones(2), Mat::Ones(2, 1), Vec::Ones(1)) == doctest::Approx(2.0));
    CHECK_THROWS_AS(mean_reward(Vec::Ones(2), Mat::Ones(3, 1), Vec::Ones(1)), ConfigError);
}

TEST_CASE("mean_reward is linear in z") {
    std::mt19937_64 g(7);
    for (int rep = 0; rep < 20; ++rep) {
        const Mat gamma = testutil::random_mat(g, 4, 2);
        const Vec beta = testutil::random_vec(g, 2);
        const Vec z1 = testutil::random_vec(g, 4), z2 = testutil::random_vec(g, 4);
        const double a = 1.7, b = -0.3;
        const double lhs = mean_reward(a * z1 + b * z2, gamma, beta);
        const double rhs = a * mean_reward(z1, gamma, beta) + b * mean_reward(z2, gamma, beta);
        CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("validate flags identification and rank problems") {
    auto spec = default_synthetic_spec(2, 1, 0.0, 100);
    CHECK(validate(spec).empty());

    auto under = spec;
    under.dims.k = 1;
    under.dims.d = 2;
    under.model.gamma0 = Mat::Ones(1, 2);
    under.model.beta0 = Vec::Ones(2);
    under.model.rho = Vec::Zero(2);
    CHECK(mentions(validate(under), "k >= d"));

    auto zero = spec;
    zero.model.gamma0 = Mat::Zero(2, 1);
    CHECK(mentions(validate(zero), "full column rank"));

    auto low_cap = spec;
    low_cap.bounds.S_beta = 0.5;
    CHECK(mentions(validate(low_cap), "S_beta"));
}

TEST_CASE("default synthetic specs validate for several shapes") {
    for (auto [k, d] : {std::pair{1, 1}, {2, 1}, {3, 2}, {5, 3}}) {
        const auto s = default_synthetic_spec(k, d, 2.0, 500);
        CHECK(validate(s).empty());
        CHECK(s.dims.n_arms == 50);
    }
}

TEST_CASE("stored means agree with recomputed z'Gamma0 beta0") {
    SyntheticSpec s{default_synthetic_spec(3, 2, 1.0, 10)};
    Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const Round r = gen_synth_round(s, rng);
        int best = 0;
        double best_v = -1e300;
        for (int a = 0; a < r.n_arms(); ++a) {
            const double v = mean_reward(r.instruments.row(a).transpose(), s.spec.model.gamma0, s.spec.model.beta0);
            CHECK((*r.mean_rewards)(a) == doctest::Approx(v).epsilon(1e-12));
            if (v > best_v) best_v = v, best = a;
        }
        CHECK(oracle_best(r).first == best);
    }
}
