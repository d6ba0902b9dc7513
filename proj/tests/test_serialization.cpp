#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "banditiv/serialization.hpp"
#include "helpers.hpp"

using namespace banditiv;

TEST_CASE("matrix json is row-major") {
    Mat m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    const Json j = to_json(m);
    CHECK(j.dump() == "[[1.0,2.0,3.0],[4.0,5.0,6.0]]");
    CHECK(matrix_from_json(j, "m") == m);
    CHECK_THROWS_AS(matrix_from_json(Json::parse("[[1,2],[3]]"), "m"), DataError);
    CHECK(to_json(Vec(Vec::Constant(1, std::nan("")))).dump() == "[null]");
}

TEST_CASE("model spec round trip") {
    const auto spec = default_synthetic_spec(3, 2, 0.7, 400);
    const auto back = model_spec_from_json(to_json(spec));
    CHECK(back.model.gamma0 == spec.model.gamma0);
    CHECK(back.model.rho == spec.model.rho);
    CHECK(back.bounds.L_y == spec.bounds.L_y);
    CHECK(back.dims.n_arms == 50);

    const auto minimal = model_spec_from_json(Json::parse(R"({"k":2,"d":1,"Gamma0":[[1],[2]],"beta0":[1],"rho":1.5})"));
    CHECK(minimal.model.rho(0) == 1.5);
    CHECK(minimal.bounds.S_gamma == doctest::Approx(std::sqrt(5.0)));
    CHECK_THROWS_AS(model_spec_from_json(Json::parse(R"({"k":2,"d":1,"Gamma0":[[1]],"beta0":[1],"rho":0})")),
                    ConfigError);
}

TEST_CASE("stored trial round trip") {
    ExperimentConfig cfg;
    cfg.env = SyntheticSpec{default_synthetic_spec(2, 1, 1.0, 40)};
    cfg.horizon = 40;
    cfg.n_trials = 1;
    cfg.keep_rounds = true;
    const auto tr = run_trial(cfg, PolicyId::eps_banditiv, 0);
    const auto st = stored_trial_from_json(Json::parse(trial_record_to_json(cfg, tr).dump()));
    CHECK(testutil::max_rel_err(st.record.Z, tr.record.Z) < 1e-15);
    CHECK(testutil::max_rel_err(st.record.deltafit, tr.record.deltafit) < 1e-15);
    CHECK(st.record.beta_hat == tr.record.beta_hat);
    CHECK(st.rounds.size() == 40);
    CHECK(st.schedule.kind() == EpsilonSchedule::Kind::sqrt_log_t_over_t);
    CHECK(st.policy == "eps_banditiv");
    CHECK(st.widths.B > 0);

    const auto path = std::filesystem::temp_directory_path() / "banditiv_bad.json";
    std::ofstream(path) << "{not json";
    CHECK_THROWS_AS(load_stored_trial(path), DataError);
    std::ofstream(path) << R"({"Z": [[1]]})";
    CHECK_THROWS_AS(load_stored_trial(path), DataError);
    std::filesystem::remove(path);
}

TEST_CASE("inference report layout") {
    RerandSummary r{0.05, 100, Vec::Constant(1, 0.4), {Interval{0.5, 1.5, false}}};
    const Json j = inference_report(Vec::Ones(1), VarianceEstimate{Mat::Ones(1, 1), 10}, {Interval{0.2, 1.8, false}}, r);
    CHECK(j["rerand"]["N_H"] == 100);
    CHECK(j["asymptotic_ci"][0]["lo"] == 0.2);
    CHECK(j["t"] == 10);
}
