#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "banditiv/harness.hpp"
#include "banditiv/linalg.hpp"
#include "banditiv/serialization.hpp"

namespace py = pybind11;
using namespace banditiv;

namespace {

py::dict estimates_dict(const Estimates& e) {
    py::dict out;
    out["t"] = e.t;
    out["Gamma_hat"] = e.gamma_hat;
    out["beta_hat"] = e.beta_hat;
    out["delta_hat"] = e.delta_hat;
    out["W"] = e.W;
    return out;
}

py::list intervals_list(const std::vector<Interval>& ivs) {
    py::list out;
    for (const auto& iv : ivs) out.append(py::make_tuple(iv.lo, iv.hi));
    return out;
}

ExperimentConfig synth_config(int k, int d, double rho, int T, int trials, const std::string& policies,
                              const std::string& eps, std::uint64_t seed, int workers) {
    ExperimentConfig cfg;
    SyntheticSpec env;
    env.spec = default_synthetic_spec(k, d, rho, T);
    cfg.env = env;
    cfg.policies = parse_policies(policies);
    cfg.horizon = T;
    cfg.n_trials = trials;
    cfg.master_seed = seed;
    cfg.eps = EpsilonSchedule::parse(eps);
    cfg.workers = workers;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Instrumented linear bandits: estimators, policies and inference";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<InferenceError>(m, "InferenceError", PyExc_RuntimeError);
    py::register_exception<EnvironmentError>(m, "EnvironmentError", PyExc_RuntimeError);

    py::class_<SuffStats>(m, "SuffStats")
        .def(py::init([](int k, int d, double gz, double gx) { return init_stats(k, d, gz, gx); }), py::arg("k"),
             py::arg("d"), py::arg("gamma_z") = 1.0, py::arg("gamma_x") = 1.0)
        .def("ingest", &SuffStats::ingest, py::arg("z"), py::arg("x"), py::arg("y"))
        .def("estimate", [](const SuffStats& s) { return estimates_dict(estimate(s)); })
        .def_readonly("U", &SuffStats::U)
        .def_readonly("V", &SuffStats::V)
        .def_readonly("zy", &SuffStats::zy)
        .def_readonly("t", &SuffStats::t);

    m.def(
        "batch_tsls",
        [](const Mat& Z, const Mat& X, const Vec& Y, double gz, double gx) {
            return estimates_dict(batch_tsls(Z, X, Y, gz, gx));
        },
        py::arg("Z"), py::arg("X"), py::arg("Y"), py::arg("gamma_z") = 1.0, py::arg("gamma_x") = 1.0);

    m.def(
        "widths",
        [](int k, int d, int T, double delta, double S_beta, double S_gamma, double L_x, double L_y, double gz,
           double gx) {
            ConfidenceConfig c{delta, T, S_beta, S_gamma, L_x, L_y, gz, gx};
            const Widths w = widths(c, k, d, 1);
            return py::make_tuple(w.B, w.G);
        },
        py::arg("k"), py::arg("d"), py::arg("T"), py::arg("delta"), py::arg("S_beta"), py::arg("S_gamma"),
        py::arg("L_x"), py::arg("L_y"), py::arg("gamma_z") = 1.0, py::arg("gamma_x") = 1.0);

    m.def(
        "optimistic_scores",
        [](const Mat& instruments, const SuffStats& s, double B, double G) {
            return optimistic_scores(instruments, estimate(s), Widths{B, G});
        },
        py::arg("instruments"), py::arg("stats"), py::arg("B"), py::arg("G"));

    m.def(
        "asymptotic_ci",
        [](const Mat& Z, const Mat& X, const Vec& Y, const Mat& deltafit, const Mat& gamma_hat, const Vec& beta_hat,
           double alpha, double gx) {
            RunRecord rec;
            rec.Z = Z;
            rec.X = X;
            rec.Y = Y;
            rec.deltafit = deltafit;
            rec.gamma_hat = gamma_hat;
            rec.beta_hat = beta_hat;
            rec.gamma_x = gx;
            const auto s = variance_estimate(rec);
            py::dict out;
            out["S_hat"] = s.S_hat;
            out["ci"] = intervals_list(asymptotic_ci(beta_hat, s, rec.t(), alpha));
            return out;
        },
        py::arg("Z"), py::arg("X"), py::arg("Y"), py::arg("deltafit"), py::arg("Gamma_hat"), py::arg("beta_hat"),
        py::arg("alpha") = 0.05, py::arg("gamma_x") = 1.0);

    m.def("normal_quantile", &normal_quantile, py::arg("p"));

    m.def(
        "run_synth",
        [](int k, int d, double rho, int T, int trials, const std::string& policies, const std::string& eps,
           std::uint64_t seed, int workers) {
            const auto cfg = synth_config(k, d, rho, T, trials, policies, eps, seed, workers);
            AggregateResult res;
            {
                py::gil_scoped_release release;
                res = run_experiment(cfg);
            }
            py::dict out;
            for (std::size_t p = 0; p < res.policies.size(); ++p) {
                const auto& agg = res.policies[p];
                py::dict one;
                one["mean_regret"] = agg.regret.mean;
                one["mean_bias"] = agg.bias.mean;
                one["mean_final_regret"] = agg.mean_final_regret;
                one["median_final_bias"] = agg.median_final_bias;
                std::vector<double> final_regret;
                for (const auto& tr : res.trials[p]) final_regret.push_back(tr.regret_curve(T - 1));
                one["final_regret"] = final_regret;
                out[py::str(to_string(agg.policy))] = one;
            }
            return out;
        },
        py::arg("k") = 1, py::arg("d") = 1, py::arg("rho") = 2.0, py::arg("T") = 500, py::arg("trials") = 5,
        py::arg("policies") = "all", py::arg("eps") = "sqrt", py::arg("seed") = 1, py::arg("workers") = 1);

    m.def(
        "coverage",
        [](const std::string& method, int k, int d, double rho, int T, int trials, int nh, double alpha,
           std::uint64_t seed) {
            auto cfg = synth_config(k, d, rho, T, trials, "eps_banditiv", "sqrt", seed, 1);
            cfg.alpha = alpha;
            CoverageConfig cov;
            if (method == "asymptotic") {
                cov.method = CoverageMethod::asymptotic;
            } else if (method == "rerand") {
                cov.method = CoverageMethod::rerand;
            } else {
                throw ConfigError("unknown coverage method '" + method + "'");
            }
            cov.n_resamples = nh;
            CoverageResult res;
            {
                py::gil_scoped_release release;
                res = coverage_experiment(cfg, cov);
            }
            return res.rates;
        },
        py::arg("method") = "asymptotic", py::arg("k") = 2, py::arg("d") = 1, py::arg("rho") = 0.0,
        py::arg("T") = 1000, py::arg("trials") = 20, py::arg("nh") = 100, py::arg("alpha") = 0.05,
        py::arg("seed") = 1);
}
