// banditiv: experiment runner for instrumented linear bandits.
#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>

#include "banditiv/harness.hpp"
#include "banditiv/linalg.hpp"
#include "banditiv/serialization.hpp"

using namespace banditiv;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct SynthArgs {
    int k = 1, d = 1, T = 2000, trials = 20, workers = 1;
    double rho = 2.0;
    std::string policies = "all", eps = "sqrt", model, out = "out";
    std::uint64_t seed = 1;
    bool trace = false, records = false;
};

struct RtbArgs {
    std::string data, policies = "all", out = "out";
    int bids = 10, T = 2000, trials = 20, workers = 1;
    double rho = 2.0;
    std::uint64_t seed = 1;
    bool trace = false;
};

struct CoverageArgs {
    std::string method = "asymptotic", policy = "eps_banditiv", out = "out";
    int k = 2, d = 1, T = 1000, trials = 200, nh = 200, grid = 20, workers = 1;
    double alpha = 0.05, rho = 0.0, span = 5.0;
    std::uint64_t seed = 1;
};

struct RerandArgs {
    std::string record, out = "out";
    double alpha = 0.05, span = 5.0;
    int nh = 200, grid = 20;
    std::uint64_t seed = 1;
};

void print_summary(const AggregateResult& res) {
    for (const auto& p : res.policies) {
        std::cout << to_string(p.policy) << ": mean final regret " << format_g9(p.mean_final_regret)
                  << ", median final bias " << format_g9(p.median_final_bias);
        if (p.beta_containment) std::cout << ", containment " << format_g9(*p.beta_containment);
        std::cout << '\n';
    }
}

int run_synth(const SynthArgs& a) {
    ExperimentConfig cfg;
    SyntheticSpec env;
    env.spec = a.model.empty() ? default_synthetic_spec(a.k, a.d, a.rho, a.T) : load_model_spec(a.model);
    env.spec.dims.horizon = a.T;
    cfg.env = env;
    cfg.policies = parse_policies(a.policies);
    cfg.horizon = a.T;
    cfg.n_trials = a.trials;
    cfg.master_seed = a.seed;
    cfg.eps = EpsilonSchedule::parse(a.eps);
    cfg.workers = a.workers;
    cfg.trace = a.trace;
    cfg.keep_rounds = a.records;
    const auto res = run_experiment(cfg);
    write_outputs(cfg, res, a.out, a.records);
    print_summary(res);
    return 0;
}

int run_rtb(const RtbArgs& a) {
    const auto log = load_impressions(a.data);
    for (const auto& w : log.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& e : log.errors) std::cerr << a.data << ':' << e.line << ": " << e.message << '\n';
    if (!log.errors.empty()) throw DataError(std::to_string(log.errors.size()) + " malformed impression rows");
    if (log.records.empty()) throw DataError("impression file has no usable rows");

    RtbSetup setup;
    setup.impressions = log.records;
    setup.spec.bid_grid = default_bid_grid(log.records, a.bids);
    setup.spec.rho = a.rho;
    ExperimentConfig cfg;
    cfg.env = setup;
    cfg.policies = parse_policies(a.policies);
    cfg.horizon = a.T;
    cfg.n_trials = a.trials;
    cfg.master_seed = a.seed;
    cfg.workers = a.workers;
    cfg.trace = a.trace;
    if (static_cast<std::size_t>(a.T) > log.records.size()) {
        std::cerr << "warning: T exceeds the number of impressions; the log is reshuffled and reused\n";
    }
    const auto res = run_experiment(cfg);
    write_outputs(cfg, res, a.out);
    print_summary(res);
    return 0;
}

int run_coverage(const CoverageArgs& a) {
    ExperimentConfig cfg;
    SyntheticSpec env;
    env.spec = default_synthetic_spec(a.k, a.d, a.rho, a.T);
    cfg.env = env;
    cfg.horizon = a.T;
    cfg.n_trials = a.trials;
    cfg.master_seed = a.seed;
    cfg.alpha = a.alpha;
    cfg.workers = a.workers;

    CoverageConfig cov;
    if (a.method == "asymptotic") {
        cov.method = CoverageMethod::asymptotic;
    } else if (a.method == "rerand") {
        cov.method = CoverageMethod::rerand;
    } else {
        throw ConfigError("unknown coverage method '" + a.method + "' (expected asymptotic or rerand)");
    }
    cov.policy = parse_policy(a.policy);
    cov.n_resamples = a.nh;
    cov.grid_points = a.grid;
    cov.grid_span = a.span;
    const auto res = coverage_experiment(cfg, cov);

    std::filesystem::create_directories(a.out);
    Json report;
    report["config"] = to_json(cfg);
    report["method"] = a.method;
    report["policy"] = a.policy;
    if (cov.method == CoverageMethod::rerand) {
        report["N_H"] = a.nh;
        report["grid_points"] = a.grid;
    }
    report["beta0"] = to_json(res.beta0);
    report["coverage"] = res.rates;
    Json trials = Json::array();
    for (std::size_t i = 0; i < res.intervals.size(); ++i) {
        trials.push_back(Json{{"trial", i}, {"beta_hat", to_json(res.beta_hats[i])}, {"ci", to_json(res.intervals[i])}});
    }
    report["trials"] = std::move(trials);
    report["diagnostics"] = res.diagnostics;
    std::ofstream(std::filesystem::path(a.out) / "report.json", std::ios::binary) << report.dump(2) << '\n';

    for (const auto& m : res.diagnostics) std::cerr << "note: " << m << '\n';
    std::cout << a.method << " coverage:";
    for (double r : res.rates) std::cout << ' ' << format_g9(r);
    std::cout << '\n';
    return 0;
}

int run_rerand(const RerandArgs& a) {
    const StoredTrial st = load_stored_trial(a.record);
    if (static_cast<long>(st.rounds.size()) < st.record.t()) {
        throw DataError("record has no stored arm sets; rerun synth with --records");
    }
    const RunRecord& rec = st.record;
    const auto var = variance_estimate(rec);
    const auto asym = asymptotic_ci(rec.beta_hat, var, rec.t(), a.alpha);
    Vec half(rec.d());
    for (Index j = 0; j < rec.d(); ++j) half(j) = 0.5 * asym[static_cast<std::size_t>(j)].width();

    const ReplayMechanism mech(st.rounds, st.schedule, st.widths);
    RerandConfig rc;
    rc.n_resamples = a.nh;
    rc.alpha = a.alpha;
    rc.tau_grid = default_tau_grid(rec.beta_hat, half, a.grid, a.span);
    const auto zero_test = rerand_test(rec, Vec::Zero(rec.d()), rc, mech, a.seed);
    const auto ci = rerand_ci(rec, rc, mech, a.seed);

    RerandSummary summary{a.alpha, a.nh, zero_test.p_values, ci.intervals};
    Json report = inference_report(rec.beta_hat, var, asym, summary);
    report["record"] = a.record;
    report["policy"] = st.policy;
    report["rerand"]["grid_points"] = a.grid;
    report["rerand"]["diagnostics"] = ci.diagnostics;
    if (st.beta0) report["beta0"] = to_json(*st.beta0);
    std::filesystem::create_directories(a.out);
    std::ofstream(std::filesystem::path(a.out) / "report.json", std::ios::binary) << report.dump(2) << '\n';

    for (const auto& m : ci.diagnostics) std::cerr << "note: " << m << '\n';
    for (Index j = 0; j < rec.d(); ++j) {
        const auto& iv = ci.intervals[static_cast<std::size_t>(j)];
        std::cout << "beta[" << j << "] = " << format_g9(rec.beta_hat(j)) << "  p(tau=0) = "
                  << format_g9(zero_test.p_values(j)) << "  ci = ["
                  << format_g9(iv.lo) << ", " << format_g9(iv.hi) << "]\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Instrumented linear bandit experiments"};
    app.require_subcommand(1);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "Synthetic two-stage environment");
    synth->add_option("--k", sa.k, "Instrument dimension")->check(CLI::PositiveNumber);
    synth->add_option("--d", sa.d, "Feature dimension")->check(CLI::PositiveNumber);
    synth->add_option("--rho", sa.rho, "Confounding strength");
    synth->add_option("--T", sa.T, "Horizon")->check(CLI::PositiveNumber);
    synth->add_option("--trials", sa.trials)->check(CLI::PositiveNumber);
    synth->add_option("--policies", sa.policies, "Comma list or 'all'");
    synth->add_option("--eps", sa.eps, "Exploration schedule")->check(CLI::IsMember({"zero", "sqrt"}));
    synth->add_option("--seed", sa.seed);
    synth->add_option("--out", sa.out);
    synth->add_option("--model", sa.model, "Model spec JSON (overrides --k --d --rho)");
    synth->add_option("--workers", sa.workers)->check(CLI::PositiveNumber);
    synth->add_flag("--trace", sa.trace, "Write per-trial choice traces");
    synth->add_flag("--records", sa.records, "Write replayable run records");

    RtbArgs ra;
    auto* rtb = app.add_subcommand("rtb", "Second-price auction replay");
    rtb->add_option("--data", ra.data, "Impression CSV")->required();
    rtb->add_option("--bids", ra.bids, "Number of bid levels")->check(CLI::Range(2, 1000));
    rtb->add_option("--rho", ra.rho);
    rtb->add_option("--T", ra.T)->check(CLI::PositiveNumber);
    rtb->add_option("--trials", ra.trials)->check(CLI::PositiveNumber);
    rtb->add_option("--policies", ra.policies);
    rtb->add_option("--seed", ra.seed);
    rtb->add_option("--out", ra.out);
    rtb->add_option("--workers", ra.workers)->check(CLI::PositiveNumber);
    rtb->add_flag("--trace", ra.trace);

    CoverageArgs ca;
    auto* coverage = app.add_subcommand("coverage", "Interval coverage over repeated trials");
    coverage->add_option("--method", ca.method)->check(CLI::IsMember({"asymptotic", "rerand"}));
    coverage->add_option("--k", ca.k)->check(CLI::PositiveNumber);
    coverage->add_option("--d", ca.d)->check(CLI::PositiveNumber);
    coverage->add_option("--rho", ca.rho);
    coverage->add_option("--T", ca.T)->check(CLI::PositiveNumber);
    coverage->add_option("--trials", ca.trials)->check(CLI::PositiveNumber);
    coverage->add_option("--nh", ca.nh, "Resamples per grid value")->check(CLI::PositiveNumber);
    coverage->add_option("--grid", ca.grid)->check(CLI::PositiveNumber);
    coverage->add_option("--span", ca.span, "Grid half-range in asymptotic half-widths");
    coverage->add_option("--alpha", ca.alpha);
    coverage->add_option("--policy", ca.policy);
    coverage->add_option("--seed", ca.seed);
    coverage->add_option("--out", ca.out);
    coverage->add_option("--workers", ca.workers)->check(CLI::PositiveNumber);

    RerandArgs rr;
    auto* rerand = app.add_subcommand("rerand", "Re-randomization inference on a stored run record");
    rerand->add_option("--record", rr.record)->required();
    rerand->add_option("--alpha", rr.alpha);
    rerand->add_option("--nh", rr.nh)->check(CLI::PositiveNumber);
    rerand->add_option("--grid", rr.grid)->check(CLI::PositiveNumber);
    rerand->add_option("--span", rr.span);
    rerand->add_option("--seed", rr.seed);
    rerand->add_option("--out", rr.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*synth) return run_synth(sa);
        if (*rtb) return run_rtb(ra);
        if (*coverage) return run_coverage(ca);
        if (*rerand) return run_rerand(rr);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
