// lab: command-line front end for the mixing-MDP laboratory.
//
// Subcommands:
//   run        execute a sweep config and write records (csv + json sidecar)
//   report     reload records and print the table plus scaling fits
//   mixing     mixing/minorization report for an MDP policy or a raw kernel
//   split-sim  split-chain simulation: cycle statistics and MC return variance
//   hard       hard-family instance emission and lower-bound verification
//   ql         plain Q-learning on an MDP file
//   vrql       combined variance-reduced procedure on an MDP file
//
// Exit codes: 0 success, 1 invalid config/input, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <mdplab/mdplab.hpp>

using nlohmann::json;
using namespace mdplab;

namespace {

json decomposition_to_json(const DoeblinDecomposition& d) {
    json j;
    j["m"] = d.m;
    j["p"] = d.p;
    j["m_over_p"] = d.minorization_value();
    j["psi"] = d.psi;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < d.residual.rows(); ++i)
        rows.emplace_back(d.residual.row(i).begin(), d.residual.row(i).end());
    j["residual"] = rows;
    return j;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

Policy policy_or_greedy(const TabularMdp& mdp, const std::string& policy_path) {
    if (!policy_path.empty()) {
        Policy pi = read_policy_file(policy_path, mdp.n_states());
        mdp.validate_policy(pi);
        return pi;
    }
    auto [v, q, pi] = solve_value_iteration(mdp, 1e-10);
    return pi;
}

int cmd_run(const std::string& config_path, const std::string& output_override, int jobs) {
    ExperimentConfig cfg = load_config(config_path);
    if (!output_override.empty()) cfg.output_path = output_override;
    if (cfg.output_path.empty()) throw ConfigError("config: no output path (set \"output\" or pass --output)");
    const auto records = run_sweep_resumable(cfg, jobs);
    long long ok = 0;
    for (const auto& r : records) ok += r.success ? 1 : 0;
    std::cout << "wrote " << records.size() << " records (" << ok << " successes) to " << cfg.output_path
              << ".csv / .json\n";
    return 0;
}

int cmd_report(const std::string& records_path) {
    const auto records = load_records(records_path);
    std::cout << kRecordCsvHeader << "\n";
    for (const auto& r : records) {
        std::printf("%s,%llu,%g,%g,%g,%s,%lld,%g,%d,%g\n", r.instance_id.c_str(),
                    static_cast<unsigned long long>(r.seed), r.gamma, r.t_minorize, r.epsilon,
                    r.setting.c_str(), r.samples_used, r.final_error, r.success ? 1 : 0, r.wall_ms);
    }
    for (SweepAxis axis : {SweepAxis::Gamma, SweepAxis::Epsilon, SweepAxis::TMinorize}) {
        try {
            const ScalingFit fit = fit_scaling(records, axis);
            std::printf("fit %s: slope=%.4f stderr=%.4f points=%d\n", axis_name(axis), fit.slope,
                        fit.stderr, fit.points);
        } catch (const std::invalid_argument&) {
        }
    }
    return 0;
}

int cmd_mixing(const std::string& mdp_path, const std::string& kernel_path, const std::string& policy_path,
               const std::string& json_path) {
    Mat kernel;
    if (!kernel_path.empty()) {
        kernel = read_kernel_file(kernel_path);
    } else if (!mdp_path.empty()) {
        const TabularMdp mdp = read_mdp_file(mdp_path);
        kernel = mdp.policy_kernel(policy_or_greedy(mdp, policy_path));
    } else {
        throw ConfigError("mixing: provide --mdp or --kernel");
    }
    const MixingReport rep = verify_equivalence(kernel);
    std::printf("t_mix        = %d\n", rep.t_mix);
    std::printf("t_minorize   = %.10g  (m=%d, p=%.10g)\n", rep.t_minorize, rep.best_decomposition.m,
                rep.best_decomposition.p);
    std::printf("t_minorize <= 22 t_mix        : %s\n", rep.minorize_le_22_tmix ? "ok" : "VIOLATED");
    std::printf("t_mix <= log(16) m/p          : %s\n", rep.tmix_le_log16_mp ? "ok" : "VIOLATED");
    std::printf("TV decay <= 2(1-p)^floor(n/m) : %s\n", rep.decay_dominated ? "ok" : "VIOLATED");
    if (rep.search_boundary_hit)
        std::printf("note: minorization argmin sits on the search horizon (4 t_mix)\n");
    std::printf("stationary  =");
    for (double e : rep.stationary) std::printf(" %.10g", e);
    std::printf("\n");
    if (!json_path.empty()) {
        json j;
        j["t_mix"] = rep.t_mix;
        j["t_minorize"] = rep.t_minorize;
        j["decomposition"] = decomposition_to_json(rep.best_decomposition);
        j["stationary"] = rep.stationary;
        j["checks"] = {{"minorize_le_22_tmix", rep.minorize_le_22_tmix},
                       {"tmix_le_log16_mp", rep.tmix_le_log16_mp},
                       {"decay_dominated", rep.decay_dominated},
                       {"search_boundary_hit", rep.search_boundary_hit}};
        json decay = json::array();
        for (auto [n, tv] : rep.tv_decay) decay.push_back({{"n", n}, {"tv", tv}});
        j["tv_decay"] = decay;
        write_json_file(json_path, j);
    }
    return 0;
}

int cmd_split_sim(const std::string& mdp_path, const std::string& policy_path, const std::string& decomp_path,
                  long long cycles, long long paths, int horizon, uint64_t seed,
                  const std::string& json_path) {
    const TabularMdp mdp = read_mdp_file(mdp_path);
    const Policy pi = policy_or_greedy(mdp, policy_path);
    const Mat p = mdp.policy_kernel(pi);

    DoeblinDecomposition decomp;
    if (!decomp_path.empty()) {
        decomp = read_decomposition_file(decomp_path, mdp.n_states());
    } else {
        const MixingReport rep = verify_equivalence(p);
        decomp = rep.best_decomposition;
    }
    std::printf("decomposition: m=%d p=%.10g (m/p=%.10g)\n", decomp.m, decomp.p, decomp.minorization_value());

    json j;
    j["decomposition"] = decomposition_to_json(decomp);
    j["seed"] = seed;

    if (cycles > 0) {
        const CycleStats cs = cycle_statistics(mdp, pi, decomp, cycles, seed);
        std::printf("cycles=%lld mean_gap=%.6g (se %.3g, expect m/p=%.6g)\n", cs.n_cycles, cs.mean_length,
                    cs.mean_length_se, decomp.minorization_value());
        std::printf("cov(gamma^T, g(W)) = %.6g (se %.3g)\n", cs.cov_gamma_g, cs.cov_gamma_g_se);
        j["cycles"] = {{"n", cs.n_cycles},
                       {"mean_gap", cs.mean_length},
                       {"mean_gap_se", cs.mean_length_se},
                       {"cov_gamma_g", cs.cov_gamma_g},
                       {"cov_gamma_g_se", cs.cov_gamma_g_se}};
    }
    if (paths > 1) {
        const CycleStats mc = monte_carlo_cumulative_variance(mdp, pi, decomp, paths, seed);
        const VarianceReport exact = exact_variance_report(mdp, pi);
        std::printf("per-(s,a) return variance (MC over %lld paths vs exact solve):\n", paths);
        json entries = json::array();
        for (int s = 0; s < mdp.n_states(); ++s)
            for (int a = 0; a < mdp.n_actions(); ++a) {
                std::printf("  (%d,%d): mc=%.6g se=%.3g exact=%.6g\n", s, a, mc.estimated_psi_variance(s, a),
                            mc.psi_variance_se(s, a), exact.psi_pi(s, a));
                entries.push_back({{"s", s},
                                   {"a", a},
                                   {"mc_variance", mc.estimated_psi_variance(s, a)},
                                   {"mc_se", mc.psi_variance_se(s, a)},
                                   {"exact", exact.psi_pi(s, a)}});
            }
        j["return_variance"] = entries;
    }
    if (horizon > 0) {
        const RegenerationTrace trace = simulate_split_chain(decomp, p, decomp.psi, horizon, seed);
        std::printf("trace: horizon=%d regenerations=%zu\n", trace.horizon, trace.regen_times.size() - 1);
        j["trace"] = {{"horizon", trace.horizon},
                      {"regen_times", trace.regen_times},
                      {"n_regenerations", trace.regen_times.size() - 1}};
    }
    if (!json_path.empty()) write_json_file(json_path, j);
    return 0;
}

int cmd_hard(double p, double t_minorize, double gamma, std::vector<long long> n_values,
             const std::string& out_dir, const std::string& json_path) {
    if (p <= 0.0 && t_minorize > 0.0) p = 1.0 / t_minorize;
    if (p <= 0.0) throw ConfigError("hard: provide --p or --t-minorize");
    const HardInstance h = make_hard_instance(p, gamma);
    if (!h.in_lower_bound_region)
        std::printf("warning: (p=%g, gamma=%g) lies outside the lower-bound region p<=0.1, gamma>=0.9\n", p,
                    gamma);

    const auto [v1, v2] = hard_instance_values(h);
    const double nu2_closed = nu_squared_closed_form(h);
    auto [v, q, pi] = solve_value_iteration(h.mdp, 1e-12);
    const VarianceReport rep = exact_variance_report(h.mdp, pi);
    const FBoundCheck fb = f_lower_bound_check(p, gamma);

    std::printf("hard instance: p=%g gamma=%g (t_minorize=%g)\n", p, gamma, 1.0 / p);
    std::printf("v* = (%.10g, %.10g)   [closed form (%.10g, %.10g)]\n", v.values[0], v.values[1], v1, v2);
    std::printf("nu^2(1,a1): closed=%.10g matrix=%.10g\n", nu2_closed, rep.nu_sq(0, 0));
    std::printf("f(p,gamma)=%.10g >= 2/81=%.10g : %s%s\n", fb.f_value, 2.0 / 81.0, fb.passes ? "ok" : "FAIL",
                fb.in_region ? "" : " (outside lower-bound region)");

    json j;
    j["p"] = p;
    j["gamma"] = gamma;
    j["t_minorize"] = 1.0 / p;
    j["v_star"] = {v.values[0], v.values[1]};
    j["nu_sq_closed"] = nu2_closed;
    j["nu_sq_matrix"] = rep.nu_sq(0, 0);
    j["f"] = {{"value", fb.f_value}, {"passes", fb.passes}, {"in_region", fb.in_region}};

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        char name[64];
        std::snprintf(name, sizeof(name), "%s/hard-t%g-g%g.mdp", out_dir.c_str(), 1.0 / p, gamma);
        write_mdp_file(name, h.mdp);
        std::printf("wrote %s\n", name);
    }

    if (!n_values.empty()) {
        json alts = json::array();
        for (long long n : n_values) {
            const AlternativeInstance alt = make_alternative(h, n);
            const double gap = qstar_gap(h, alt);
            std::printf("alternative n=%lld: hellinger=%.6g (bound %.6g) max_pert=%.6g (bound p/2=%.6g) "
                        "qstar_gap=%.6g sqrt(n)*gap=%.6g\n",
                        n, alt.hellinger, 0.5 / std::sqrt(static_cast<double>(n)), alt.max_perturbation,
                        p / 2.0, gap, std::sqrt(static_cast<double>(n)) * gap);
            alts.push_back({{"n", n},
                            {"hellinger", alt.hellinger},
                            {"hellinger_bound", 0.5 / std::sqrt(static_cast<double>(n))},
                            {"max_perturbation", alt.max_perturbation},
                            {"qstar_gap", gap}});
            if (!out_dir.empty()) {
                const std::string path = out_dir + "/alternative-n" + std::to_string(n) + ".mdp";
                write_mdp_file(path, alt.mdp_bar);
                std::printf("wrote %s\n", path.c_str());
            }
        }
        j["alternatives"] = alts;
    }
    if (!json_path.empty()) write_json_file(json_path, j);
    return 0;
}

json learner_result_to_json(const LearnerResult& res, uint64_t seed, double final_error) {
    json j;
    j["seed"] = seed;
    j["samples_used"] = res.samples_used;
    j["wall_ms"] = res.wall_seconds * 1000.0;
    j["per_epoch_errors"] = res.per_epoch_errors;
    j["final_error"] = final_error;
    return j;
}

int cmd_ql(const std::string& mdp_path, long long steps, const std::string& setting, double epsilon,
           double delta, double t_bound, ScheduleConstants constants, std::vector<uint64_t> seeds,
           const std::string& json_path) {
    const TabularMdp mdp = read_mdp_file(mdp_path);
    auto [v, qstar, pi] = solve_value_iteration(mdp, 1e-10);
    if (t_bound <= 0.0) t_bound = verify_equivalence(mdp.policy_kernel(pi)).t_minorize;
    long long k = steps;
    if (k <= 0) {
        const LearnerSchedule sched =
            make_schedule(setting_from_name(setting), mdp.n_states(), mdp.n_actions(), mdp.gamma(),
                          epsilon, delta, t_bound, constants);
        k = sched.k0;
    }
    json out = json::array();
    for (uint64_t seed : seeds) {
        GenerativeModel gm(mdp, seed);
        const auto t0 = std::chrono::steady_clock::now();
        const QFunction q = q_learning(gm, k, QFunction(mdp.n_states(), mdp.n_actions(), 0.0));
        LearnerResult res;
        res.samples_used = gm.total_samples();
        res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double err = sup_norm_diff(q, qstar);
        res.per_epoch_errors = {err};
        std::printf("seed %llu: k=%lld samples=%lld error=%.6g\n", static_cast<unsigned long long>(seed), k,
                    res.samples_used, err);
        out.push_back(learner_result_to_json(res, seed, err));
    }
    if (!json_path.empty()) write_json_file(json_path, out);
    return 0;
}

int cmd_vrql(const std::string& mdp_path, const std::string& setting, double epsilon, double delta,
             double t_bound, ScheduleConstants constants, double beta, std::vector<uint64_t> seeds,
             const std::string& json_path) {
    const TabularMdp mdp = read_mdp_file(mdp_path);
    auto [v, qstar, pi] = solve_value_iteration(mdp, 1e-10);
    if (t_bound <= 0.0) t_bound = verify_equivalence(mdp.policy_kernel(pi)).t_minorize;
    const LearnerSchedule sched =
        make_schedule(setting_from_name(setting), mdp.n_states(), mdp.n_actions(), mdp.gamma(), epsilon,
                      delta, t_bound, constants, beta,
                      std::nullopt, std::optional<double>(optimality_gap(mdp)));
    std::printf("schedule: k0=%lld k*=%lld l*=%d total=%lld samples\n", sched.k0, sched.k_star, sched.l_star,
                theoretical_sample_bound(sched, mdp.n_states(), mdp.n_actions()));
    json out = json::array();
    int successes = 0;
    for (uint64_t seed : seeds) {
        GenerativeModel gm(mdp, seed);
        const LearnerResult res = run_combined(gm, sched, &qstar);
        const double err = sup_norm_diff(res.q_hat, qstar);
        successes += err <= epsilon ? 1 : 0;
        std::printf("seed %llu: samples=%lld final_error=%.6g %s\n", static_cast<unsigned long long>(seed),
                    res.samples_used, err, err <= epsilon ? "(success)" : "");
        out.push_back(learner_result_to_json(res, seed, err));
    }
    std::printf("successes: %d/%zu (target 1-delta = %g)\n", successes, seeds.size(), 1.0 - delta);
    if (!json_path.empty()) write_json_file(json_path, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mdplab: a numerical laboratory for discounted mixing MDPs"};
    app.require_subcommand(1);

    // run
    std::string run_config, run_output;
    int run_jobs = 0;
    auto* run = app.add_subcommand("run", "execute a sweep config");
    run->add_option("config", run_config, "JSON config file")->required();
    run->add_option("--output", run_output, "override the config's output path");
    run->add_option("--jobs", run_jobs, "worker threads (default: hardware)");

    // report
    std::string report_path;
    auto* report = app.add_subcommand("report", "print a record table and scaling fits");
    report->add_option("records", report_path, "records sidecar (.json)")->required();

    // mixing
    std::string mix_mdp, mix_kernel, mix_policy, mix_json;
    auto* mixing = app.add_subcommand("mixing", "mixing/minorization report");
    mixing->add_option("--mdp", mix_mdp, "MDP file");
    mixing->add_option("--kernel", mix_kernel, "raw kernel file");
    mixing->add_option("--policy", mix_policy, "policy file (default: greedy-optimal)");
    mixing->add_option("--json", mix_json, "write the report as JSON");

    // split-sim
    std::string ss_mdp, ss_policy, ss_decomp, ss_json;
    long long ss_cycles = 10000, ss_paths = 0;
    int ss_horizon = 0;
    uint64_t ss_seed = 1;
    auto* split = app.add_subcommand("split-sim", "split-chain simulation");
    split->add_option("--mdp", ss_mdp, "MDP file")->required();
    split->add_option("--policy", ss_policy, "policy file (default: greedy-optimal)");
    split->add_option("--decomp", ss_decomp, "Doeblin decomposition file (default: computed)");
    split->add_option("--cycles", ss_cycles, "regeneration cycles to simulate");
    split->add_option("--paths", ss_paths, "paths for the per-(s,a) return-variance estimate");
    split->add_option("--horizon", ss_horizon, "also emit one raw trace of this length");
    split->add_option("--seed", ss_seed, "master seed");
    split->add_option("--json", ss_json, "write results as JSON");

    // hard
    double hard_p = 0.0, hard_t = 0.0, hard_gamma = 0.9;
    std::vector<long long> hard_n;
    std::string hard_out, hard_json;
    auto* hard = app.add_subcommand("hard", "hard-family construction and verification");
    hard->add_option("--p", hard_p, "switching probability");
    hard->add_option("--t-minorize", hard_t, "minorization time (p = 1/t)");
    hard->add_option("--gamma", hard_gamma, "discount factor");
    hard->add_option("--n", hard_n, "sample budgets for the alternative instance");
    hard->add_option("--out-dir", hard_out, "directory for emitted instance files");
    hard->add_option("--json", hard_json, "write the verification report as JSON");

    // shared learner options
    std::string ql_mdp, ql_setting = "general", ql_json;
    double ql_eps = 1.0, ql_delta = 0.1, ql_t = 0.0, ql_beta = 0.1;
    ScheduleConstants ql_consts;
    std::vector<uint64_t> ql_seeds = {1};
    long long ql_steps = 0;

    auto add_learner_options = [&](CLI::App* cmd) {
        cmd->add_option("--mdp", ql_mdp, "MDP file")->required();
        cmd->add_option("--setting", ql_setting, "general | unique-lipschitz | uniform");
        cmd->add_option("--epsilon", ql_eps, "target sup-norm error");
        cmd->add_option("--delta", ql_delta, "failure probability");
        cmd->add_option("--t-minorize", ql_t, "minorization bound (default: computed)");
        cmd->add_option("--c0", ql_consts.c0, "warm-start constant");
        cmd->add_option("--c1", ql_consts.c1, "inner-loop constant");
        cmd->add_option("--c2", ql_consts.c2, "recentering constant");
        cmd->add_option("--seed", ql_seeds, "seeds (repeatable)");
        cmd->add_option("--json", ql_json, "write LearnerResult records as JSON");
    };

    auto* ql = app.add_subcommand("ql", "plain Q-learning");
    add_learner_options(ql);
    ql->add_option("--steps", ql_steps, "steps (default: the setting's warm-start k0)");

    auto* vrql = app.add_subcommand("vrql", "combined variance-reduced procedure");
    add_learner_options(vrql);
    vrql->add_option("--beta", ql_beta, "K2 threshold exponent (unique-lipschitz only)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_config, run_output, run_jobs);
        if (report->parsed()) return cmd_report(report_path);
        if (mixing->parsed()) return cmd_mixing(mix_mdp, mix_kernel, mix_policy, mix_json);
        if (split->parsed())
            return cmd_split_sim(ss_mdp, ss_policy, ss_decomp, ss_cycles, ss_paths, ss_horizon, ss_seed, ss_json);
        if (hard->parsed()) return cmd_hard(hard_p, hard_t, hard_gamma, hard_n, hard_out, hard_json);
        if (ql->parsed())
            return cmd_ql(ql_mdp, ql_steps, ql_setting, ql_eps, ql_delta, ql_t, ql_consts, ql_seeds, ql_json);
        if (vrql->parsed())
            return cmd_vrql(ql_mdp, ql_setting, ql_eps, ql_delta, ql_t, ql_consts, ql_beta, ql_seeds, ql_json);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
