#include "banditiv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "banditiv/linalg.hpp"
#include "banditiv/serialization.hpp"

namespace banditiv {

std::string to_string(PolicyId p) {
    switch (p) {
        case PolicyId::banditiv:
            return "banditiv";
        case PolicyId::eps_banditiv:
            return "eps_banditiv";
        case PolicyId::oful:
            return "oful";
        case PolicyId::ts:
            return "ts";
    }
    return "unknown";
}

PolicyId parse_policy(const std::string& name) {
    if (name == "banditiv") return PolicyId::banditiv;
    if (name == "eps_banditiv" || name == "eps-banditiv") return PolicyId::eps_banditiv;
    if (name == "oful") return PolicyId::oful;
    if (name == "ts") return PolicyId::ts;
    throw ConfigError("unknown policy '" + name + "' (expected banditiv, eps_banditiv, oful, ts)");
}

std::vector<PolicyId> parse_policies(const std::string& list) {
    if (list == "all") return {PolicyId::banditiv, PolicyId::eps_banditiv, PolicyId::oful, PolicyId::ts};
    std::vector<PolicyId> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const PolicyId p = parse_policy(item);
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
    if (out.empty()) throw ConfigError("policy list is empty");
    return out;
}

void ExperimentConfig::check() const {
    if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (policies.empty()) throw ConfigError("policy set is empty");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (!(delta_conf > 0 && delta_conf < 1)) throw ConfigError("delta_conf must lie in (0, 1)");
    if (!(gamma_z > 0 && gamma_x > 0 && baseline.gamma > 0)) throw ConfigError("ridge parameters must be positive");
    if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
    if (const auto* s = std::get_if<SyntheticSpec>(&env)) {
        const auto violations = validate(s->spec);
        if (!violations.empty()) {
            std::string msg = "invalid model spec:";
            for (const auto& v : violations) msg += "\n  - " + v;
            throw ConfigError(msg);
        }
        if (!(s->z_high > s->z_low)) throw ConfigError("instrument support is empty");
    } else {
        const auto& r = std::get<RtbSetup>(env);
        r.spec.check();
        if (r.impressions.empty()) throw DataError("no impressions to replay");
        if (!(r.S_gamma > 0)) throw ConfigError("S_gamma must be positive");
    }
}

EnvFacts env_facts(const EnvSpec& env) {
    EnvFacts f;
    if (const auto* s = std::get_if<SyntheticSpec>(&env)) {
        f.k = s->spec.dims.k;
        f.d = s->spec.dims.d;
        f.n_arms = s->spec.dims.n_arms;
        f.bounds = s->spec.bounds;
        f.beta0 = s->spec.model.beta0;
        f.gamma0 = s->spec.model.gamma0;
        return f;
    }
    const auto& r = std::get<RtbSetup>(env);
    f.k = rtb_instrument_dim(r.impressions.front());
    f.d = 2;
    f.n_arms = static_cast<int>(r.spec.bid_grid.size());
    f.beta0 = r.spec.beta();
    double lz = 0.0;
    for (const auto& imp : r.impressions) {
        double slot = 0.0;
        for (double v : imp.slot_features) slot += v * v;
        for (double b : r.spec.bid_grid) {
            lz = std::max(lz, std::sqrt(1.0 + slot + b * b + imp.paying_price * imp.paying_price));
        }
    }
    f.bounds.L_z = lz;
    f.bounds.L_x = std::sqrt(2.0);
    f.bounds.L_y = std::abs(r.spec.beta_basic) + std::abs(r.spec.beta_ate) +
                   3.0 * std::abs(r.spec.rho) * r.spec.shock_scale + 3.0 * r.spec.noise_sd;
    f.bounds.lambda_min = 1.0;
    f.bounds.S_beta = f.beta0.norm();
    f.bounds.S_gamma = r.S_gamma;
    return f;
}

EnvironmentStream::EnvironmentStream(const EnvSpec& env, Rng rng) : env_(&env), rng_(std::move(rng)) {
    if (const auto* r = std::get_if<RtbSetup>(env_)) {
        order_.resize(r->impressions.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
    }
}

Round EnvironmentStream::next() {
    if (const auto* s = std::get_if<SyntheticSpec>(env_)) return gen_synth_round(*s, rng_);
    const auto& r = std::get<RtbSetup>(*env_);
    if (pos_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
        wrapped_ = true;
    }
    return gen_rtb_round(r.impressions[order_[pos_++]], r.spec, rng_);
}

namespace {

bool beta_inside(const Estimates& est, const Vec& beta0, double radius) {
    return weighted_norm(est.W, est.beta_hat - beta0) <= radius;
}

bool gamma_inside(const Estimates& est, const Mat& gamma0, double radius) {
    for (Index i = 0; i < gamma0.cols(); ++i) {
        if (weighted_norm(est.U, est.gamma_hat.col(i) - gamma0.col(i)) > radius) return false;
    }
    return true;
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, PolicyId policy, int trial_index) {
    const EnvFacts facts = env_facts(cfg.env);
    const int T = cfg.horizon;
    const int k = facts.k;
    const int d = facts.d;
    const auto trial_tag = static_cast<std::uint64_t>(trial_index);

    TrialResult out;
    out.policy = policy;
    out.trial = trial_index;
    out.seed = derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(Stream::policy), trial_tag});

    EnvironmentStream env(cfg.env, make_rng(cfg.master_seed, {static_cast<std::uint64_t>(Stream::environment), trial_tag}));
    Rng rng(out.seed);

    const ConfidenceConfig conf = make_confidence_config(facts.bounds, T, cfg.delta_conf, cfg.gamma_z, cfg.gamma_x);
    const Widths w = widths(conf, k, d, 1);
    BaselineConfig base = cfg.baseline;
    base.delta_conf = cfg.delta_conf;
    base.S_beta = facts.bounds.S_beta;
    base.L_x = facts.bounds.L_x;

    SuffStats stats = init_stats(k, d, cfg.gamma_z, cfg.gamma_x);
    RidgeStats ridge(d, base.gamma);
    Estimates est = estimate(stats);

    RunRecord& rec = out.record;
    rec.Z.resize(T, k);
    rec.X.resize(T, d);
    rec.Y.resize(T);
    rec.deltafit.resize(T, k);
    rec.gamma_z = cfg.gamma_z;
    rec.gamma_x = cfg.gamma_x;

    out.regret_curve.resize(T);
    out.bias_curve.resize(T);
    const bool iv = is_instrumented(policy);
    const bool track_containment = iv && facts.gamma0.has_value();
    bool beta_ok = true;
    bool gamma_ok = true;
    double cumulative = 0.0;
    if (cfg.keep_rounds) out.rounds.reserve(static_cast<std::size_t>(T));

    for (int t = 0; t < T; ++t) {
        Round round = env.next();
        const auto [best, best_mean] = oracle_best(round);

        ArmChoice choice;
        if (t == 0) {
            choice = ArmChoice{random_arm(round, rng), true, std::nan("")};
        } else {
            switch (policy) {
                case PolicyId::banditiv:
                    choice = select_arm(round, est, w, 0.0, rng);
                    break;
                case PolicyId::eps_banditiv:
                    choice = select_arm(round, est, w, cfg.eps.at(t), rng);
                    break;
                case PolicyId::oful:
                    choice = ArmChoice{select_oful(round, ridge, ridge.t, base), false, std::nan("")};
                    break;
                case PolicyId::ts:
                    choice = ArmChoice{select_ts(round, ridge, base, rng), false, std::nan("")};
                    break;
            }
            if (track_containment) {
                beta_ok = beta_ok && beta_inside(est, facts.beta0, w.B);
                gamma_ok = gamma_ok && gamma_inside(est, *facts.gamma0, w.G);
            }
        }

        const int a = choice.arm;
        const Vec z = round.instruments.row(a).transpose();
        const Vec x = round.features.row(a).transpose();
        const double y = round.reward(a);
        rec.Z.row(t) = z.transpose();
        rec.X.row(t) = x.transpose();
        rec.Y(t) = y;
        rec.deltafit.row(t) = (est.gamma_hat * est.beta_hat).transpose();

        const double instant = best_mean - (*round.mean_rewards)(a);
        cumulative += std::max(instant, 0.0);
        out.regret_curve(t) = cumulative;

        stats.ingest(z, x, y);
        ridge.ingest(x, y);
        est = estimate(stats);
        const Vec beta_now = iv ? est.beta_hat : ridge.beta_hat();
        out.bias_curve(t) = (facts.beta0 - beta_now).norm();

        if (cfg.trace) {
            out.trace.push_back(ChoiceTraceRow{t, a, choice.explored, choice.score, instant, out.bias_curve(t)});
        }
        if (cfg.keep_rounds) out.rounds.push_back(std::move(round));
    }

    rec.gamma_hat = est.gamma_hat;
    rec.beta_hat = est.beta_hat;
    rec.U = stats.U;
    out.final_beta = iv ? est.beta_hat : ridge.beta_hat();
    out.wrapped = env.wrapped();
    if (track_containment) {
        out.beta_contained = beta_ok;
        out.gamma_contained = gamma_ok;
    }
    if (iv) {
        try {
            out.asymptotic_ci = asymptotic_ci(rec.beta_hat, variance_estimate(rec), rec.t(), cfg.alpha);
            for (Index j = 0; j < d; ++j) {
                out.ci_covers.push_back(out.asymptotic_ci[static_cast<std::size_t>(j)].contains(facts.beta0(j)));
            }
        } catch (const InferenceError&) {
            // Too few rounds for the variance estimate; leave the intervals empty.
        }
    }
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

CurveStats curve_stats(const std::vector<const Vec*>& curves) {
    CurveStats s;
    if (curves.empty()) return s;
    const Index T = curves.front()->size();
    s.mean.resize(T);
    s.q25.resize(T);
    s.q75.resize(T);
    std::vector<double> column(curves.size());
    for (Index t = 0; t < T; ++t) {
        double sum = 0.0;
        for (std::size_t i = 0; i < curves.size(); ++i) {
            column[i] = (*curves[i])(t);
            sum += column[i];
        }
        s.mean(t) = sum / static_cast<double>(curves.size());
        s.q25(t) = quantile(column, 0.25);
        s.q75(t) = quantile(column, 0.75);
    }
    return s;
}

namespace {

// Runs jobs [0, n) on a small pool; job results are written by index.
template <class Fn>
void parallel_for(int n, int workers, Fn&& fn) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    auto loop = [&] {
        while (!failed.load()) {
            const int i = next.fetch_add(1);
            if (i >= n) break;
            try {
                fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
                failed.store(true);
            }
        }
    };
    const int threads = std::max(1, std::min(workers, n));
    if (threads == 1) {
        loop();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w) pool.emplace_back(loop);
        for (auto& th : pool) th.join();
    }
    for (int i = 0; i < n; ++i) {
        if (errors[static_cast<std::size_t>(i)]) throw std::make_pair(i, errors[static_cast<std::size_t>(i)]);
    }
}

[[noreturn]] void rethrow_trial_failure(const std::pair<int, std::exception_ptr>& failure, const std::string& policy,
                                        int trial, std::uint64_t seed) {
    std::ostringstream os;
    os << "trial failed (policy " << policy << ", trial " << trial << ", seed " << seed << "): ";
    try {
        std::rethrow_exception(failure.second);
    } catch (const ConfigError& e) {
        throw ConfigError(os.str() + e.what());
    } catch (const DataError& e) {
        throw DataError(os.str() + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(os.str() + e.what());
    }
}

}  // namespace

AggregateResult run_experiment(const ExperimentConfig& cfg) {
    cfg.check();
    const int n_pol = static_cast<int>(cfg.policies.size());
    const int n_jobs = n_pol * cfg.n_trials;

    AggregateResult out;
    out.trials.assign(static_cast<std::size_t>(n_pol), std::vector<TrialResult>(static_cast<std::size_t>(cfg.n_trials)));
    try {
        parallel_for(n_jobs, cfg.workers, [&](int job) {
            const int p = job / cfg.n_trials;
            const int trial = job % cfg.n_trials;
            out.trials[static_cast<std::size_t>(p)][static_cast<std::size_t>(trial)] =
                run_trial(cfg, cfg.policies[static_cast<std::size_t>(p)], trial);
        });
    } catch (const std::pair<int, std::exception_ptr>& failure) {
        const int p = failure.first / cfg.n_trials;
        const int trial = failure.first % cfg.n_trials;
        rethrow_trial_failure(failure, to_string(cfg.policies[static_cast<std::size_t>(p)]), trial,
                              derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(Stream::policy),
                                                            static_cast<std::uint64_t>(trial)}));
    }

    const Index d = env_facts(cfg.env).d;
    for (int p = 0; p < n_pol; ++p) {
        const auto& trials = out.trials[static_cast<std::size_t>(p)];
        PolicyAggregate agg;
        agg.policy = cfg.policies[static_cast<std::size_t>(p)];
        std::vector<const Vec*> regrets, biases;
        std::vector<double> final_regret, final_bias;
        for (const auto& tr : trials) {
            regrets.push_back(&tr.regret_curve);
            biases.push_back(&tr.bias_curve);
            final_regret.push_back(tr.regret_curve(tr.regret_curve.size() - 1));
            final_bias.push_back(tr.bias_curve(tr.bias_curve.size() - 1));
        }
        agg.regret = curve_stats(regrets);
        agg.bias = curve_stats(biases);
        agg.mean_final_regret = std::accumulate(final_regret.begin(), final_regret.end(), 0.0) /
                                static_cast<double>(final_regret.size());
        agg.median_final_bias = median(final_bias);
        if (is_instrumented(agg.policy)) {
            agg.ci_coverage.assign(static_cast<std::size_t>(d), 0.0);
            int beta_in = 0, gamma_in = 0, tracked = 0;
            for (const auto& tr : trials) {
                for (std::size_t j = 0; j < tr.ci_covers.size(); ++j) agg.ci_coverage[j] += tr.ci_covers[j] ? 1.0 : 0.0;
                if (tr.beta_contained) {
                    ++tracked;
                    beta_in += *tr.beta_contained ? 1 : 0;
                    gamma_in += *tr.gamma_contained ? 1 : 0;
                }
            }
            for (double& c : agg.ci_coverage) c /= static_cast<double>(trials.size());
            if (tracked > 0) {
                agg.beta_containment = static_cast<double>(beta_in) / tracked;
                agg.gamma_containment = static_cast<double>(gamma_in) / tracked;
            }
        }
        out.policies.push_back(std::move(agg));
    }
    out.config_hash = config_hash(cfg);
    out.master_seed = cfg.master_seed;
    out.n_trials = cfg.n_trials;
    return out;
}

ReplayMechanism make_replay_mechanism(const ExperimentConfig& cfg, const TrialResult& trial) {
    if (!is_instrumented(trial.policy)) throw InferenceError("replay needs an instrumented policy");
    if (static_cast<long>(trial.rounds.size()) < trial.record.t()) {
        throw InferenceError("trial did not retain its arm sets; run with keep_rounds");
    }
    const EnvFacts facts = env_facts(cfg.env);
    const ConfidenceConfig conf =
        make_confidence_config(facts.bounds, cfg.horizon, cfg.delta_conf, cfg.gamma_z, cfg.gamma_x);
    EpsilonSchedule schedule = trial.policy == PolicyId::eps_banditiv ? cfg.eps : EpsilonSchedule::zero();
    return ReplayMechanism(trial.rounds, std::move(schedule), widths(conf, facts.k, facts.d, 1));
}

CoverageResult coverage_experiment(const ExperimentConfig& cfg_in, const CoverageConfig& cov) {
    ExperimentConfig cfg = cfg_in;
    cfg.policies = {cov.policy};
    cfg.keep_rounds = cov.method == CoverageMethod::rerand;
    cfg.check();
    if (!is_instrumented(cov.policy)) throw ConfigError("coverage needs an instrumented policy");
    const EnvFacts facts = env_facts(cfg.env);
    const auto d = static_cast<std::size_t>(facts.d);

    CoverageResult out;
    out.beta0 = facts.beta0;
    out.intervals.resize(static_cast<std::size_t>(cfg.n_trials));
    out.beta_hats.resize(static_cast<std::size_t>(cfg.n_trials));
    std::vector<std::vector<std::string>> diags(static_cast<std::size_t>(cfg.n_trials));

    try {
        parallel_for(cfg.n_trials, cfg.workers, [&](int trial) {
            const auto it = static_cast<std::size_t>(trial);
            TrialResult tr = run_trial(cfg, cov.policy, trial);
            out.beta_hats[it] = tr.record.beta_hat;
            const auto var = variance_estimate(tr.record);
            const auto asym = asymptotic_ci(tr.record.beta_hat, var, tr.record.t(), cfg.alpha);
            if (cov.method == CoverageMethod::asymptotic) {
                out.intervals[it] = asym;
                return;
            }
            Vec half(facts.d);
            for (std::size_t j = 0; j < d; ++j) half(static_cast<Index>(j)) = 0.5 * asym[j].width();
            RerandConfig rc;
            rc.n_resamples = cov.n_resamples;
            rc.alpha = cfg.alpha;
            rc.tau_grid = default_tau_grid(tr.record.beta_hat, half, cov.grid_points, cov.grid_span);
            const auto mech = make_replay_mechanism(cfg, tr);
            auto res = rerand_ci(tr.record, rc, mech,
                                 derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(Stream::inference),
                                                               static_cast<std::uint64_t>(trial)}));
            out.intervals[it] = std::move(res.intervals);
            diags[it] = std::move(res.diagnostics);
        });
    } catch (const std::pair<int, std::exception_ptr>& failure) {
        rethrow_trial_failure(failure, to_string(cov.policy), failure.first,
                              derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(Stream::policy),
                                                            static_cast<std::uint64_t>(failure.first)}));
    }

    out.rates.assign(d, 0.0);
    for (std::size_t i = 0; i < out.intervals.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (out.intervals[i][j].contains(facts.beta0(static_cast<Index>(j)))) out.rates[j] += 1.0;
        }
        for (auto& m : diags[i]) out.diagnostics.push_back("trial " + std::to_string(i) + ": " + m);
    }
    for (double& r : out.rates) r /= static_cast<double>(cfg.n_trials);
    return out;
}

std::string format_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string s = to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_curves_csv(const AggregateResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "policy,round,mean_regret,q25_regret,q75_regret,mean_bias,q25_bias,q75_bias\n";
    for (const auto& p : result.policies) {
        const std::string name = to_string(p.policy);
        for (Index t = 0; t < p.regret.mean.size(); ++t) {
            out << name << ',' << t << ',' << format_g9(p.regret.mean(t)) << ',' << format_g9(p.regret.q25(t)) << ','
                << format_g9(p.regret.q75(t)) << ',' << format_g9(p.bias.mean(t)) << ',' << format_g9(p.bias.q25(t))
                << ',' << format_g9(p.bias.q75(t)) << '\n';
        }
    }
}

void write_trace_csv(const TrialResult& trial, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "round,arm,explored,score,instant_regret,bias\n";
    for (const auto& r : trial.trace) {
        out << r.round << ',' << r.arm << ',' << (r.explored ? 1 : 0) << ',' << format_g9(r.score) << ','
            << format_g9(r.instant_regret) << ',' << format_g9(r.bias) << '\n';
    }
}

void write_outputs(const ExperimentConfig& cfg, const AggregateResult& result, const std::filesystem::path& dir,
                   bool records) {
    std::filesystem::create_directories(dir);
    write_curves_csv(result, dir / "curves.csv");

    Json report;
    report["config"] = to_json(cfg);
    report["config_hash"] = result.config_hash;
    report["master_seed"] = result.master_seed;
    report["n_trials"] = result.n_trials;
    Json pols = Json::array();
    for (std::size_t p = 0; p < result.policies.size(); ++p) {
        const auto& agg = result.policies[p];
        Json jp;
        jp["policy"] = to_string(agg.policy);
        jp["mean_final_regret"] = agg.mean_final_regret;
        jp["median_final_bias"] = agg.median_final_bias;
        if (!agg.ci_coverage.empty()) jp["asymptotic_ci_coverage"] = agg.ci_coverage;
        if (agg.beta_containment) jp["beta_containment"] = *agg.beta_containment;
        if (agg.gamma_containment) jp["gamma_containment"] = *agg.gamma_containment;
        Json jt = Json::array();
        for (const auto& tr : result.trials[p]) {
            Json one;
            one["trial"] = tr.trial;
            one["seed"] = tr.seed;
            one["final_regret"] = tr.regret_curve(tr.regret_curve.size() - 1);
            one["final_bias"] = tr.bias_curve(tr.bias_curve.size() - 1);
            one["final_beta"] = to_json(tr.final_beta);
            if (!tr.asymptotic_ci.empty()) one["asymptotic_ci"] = to_json(tr.asymptotic_ci);
            if (tr.wrapped) one["impressions_wrapped"] = true;
            jt.push_back(std::move(one));
        }
        jp["trials"] = std::move(jt);
        pols.push_back(std::move(jp));
    }
    report["policies"] = std::move(pols);
    {
        std::ofstream out(dir / "report.json", std::ios::binary);
        if (!out) throw DataError("cannot write report.json");
        out << report.dump(2) << '\n';
    }

    for (const auto& trials : result.trials) {
        for (const auto& tr : trials) {
            const std::string stem = to_string(tr.policy) + "_" + std::to_string(tr.trial);
            if (cfg.trace) write_trace_csv(tr, dir / ("trace_" + stem + ".csv"));
            if (records && is_instrumented(tr.policy)) {
                std::ofstream out(dir / ("record_" + stem + ".json"), std::ios::binary);
                out << trial_record_to_json(cfg, tr).dump() << '\n';
            }
        }
    }
}

}  // namespace banditiv
