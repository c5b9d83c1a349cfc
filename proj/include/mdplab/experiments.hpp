#ifndef MDPLAB_EXPERIMENTS_HPP
#define MDPLAB_EXPERIMENTS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "algorithms.hpp"
#include "hard_instances.hpp"
#include "io.hpp"
#include "mdp.hpp"
#include "mixing.hpp"
#include "stats.hpp"

namespace mdplab {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// One sweep: an instance (hard-family parameters or an MDP file), a learner
// setting, grids over gamma / t_minorize / epsilon, and a seed list. Grids
// left empty collapse to the base point.
struct ExperimentConfig {
    std::string instance_file;  // empty => hard family
    double hard_t_minorize = 10.0;
    double base_gamma = 0.9;
    Setting setting = Setting::GeneralOptimalMixing;
    double epsilon = 1.0;
    double delta = 0.1;
    std::vector<uint64_t> seeds;
    Vec gamma_grid;
    Vec t_minorize_grid;
    Vec epsilon_grid;
    std::vector<long long> n_grid;  // alternative-instance sweep (lab hard)
    ScheduleConstants constants;
    double beta = 0.1;
    std::optional<double> lipschitz_L;
    std::optional<double> gap_Delta;
    double t_minorize_bound = 0.0;  // file instances; 0 => computed from the optimal policy
    std::string output_path;        // base path, no extension
};

struct ExperimentRecord {
    std::string config_hash;
    std::string instance_id;
    uint64_t seed = 0;
    std::string setting;
    double gamma = 0.0;
    double t_minorize = 0.0;
    double epsilon = 0.0;
    long long samples_used = 0;
    double final_error = 0.0;
    bool success = false;
    std::vector<double> per_epoch_errors;
    double wall_ms = 0.0;
    std::string note;  // failure message for errored trials
};

enum class SweepAxis { Gamma, Epsilon, TMinorize };

inline const char* axis_name(SweepAxis a) {
    switch (a) {
        case SweepAxis::Gamma: return "gamma";
        case SweepAxis::Epsilon: return "epsilon";
        case SweepAxis::TMinorize: return "t_minorize";
    }
    return "?";
}

namespace detail {

inline std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline void require_sorted(const Vec& grid, const char* name) {
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw ConfigError(std::string("config: ") + name + " grid must be sorted ascending");
}

inline std::string canonical_config_string(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "instance=" << c.instance_file << ";t=" << fmt_double(c.hard_t_minorize)
       << ";g=" << fmt_double(c.base_gamma) << ";setting=" << setting_name(c.setting)
       << ";eps=" << fmt_double(c.epsilon) << ";delta=" << fmt_double(c.delta)
       << ";c0=" << fmt_double(c.constants.c0) << ";c1=" << fmt_double(c.constants.c1)
       << ";c2=" << fmt_double(c.constants.c2) << ";beta=" << fmt_double(c.beta)
       << ";tb=" << fmt_double(c.t_minorize_bound);
    os << ";seeds=";
    for (uint64_t s : c.seeds) os << s << ",";
    os << ";gg=";
    for (double v : c.gamma_grid) os << fmt_double(v) << ",";
    os << ";tg=";
    for (double v : c.t_minorize_grid) os << fmt_double(v) << ",";
    os << ";eg=";
    for (double v : c.epsilon_grid) os << fmt_double(v) << ",";
    os << ";ng=";
    for (long long v : c.n_grid) os << v << ",";
    if (c.lipschitz_L) os << ";L=" << fmt_double(*c.lipschitz_L);
    if (c.gap_Delta) os << ";D=" << fmt_double(*c.gap_Delta);
    return os.str();
}

struct GridPoint {
    double gamma = 0.0;
    double t_minorize = 0.0;
    double epsilon = 0.0;
};

inline std::vector<GridPoint> expand_grid(const ExperimentConfig& c) {
    const Vec gammas = c.gamma_grid.empty() ? Vec{c.base_gamma} : c.gamma_grid;
    const Vec ts = c.t_minorize_grid.empty() ? Vec{c.hard_t_minorize} : c.t_minorize_grid;
    const Vec epss = c.epsilon_grid.empty() ? Vec{c.epsilon} : c.epsilon_grid;
    std::vector<GridPoint> points;
    for (double g : gammas)
        for (double t : ts)
            for (double e : epss) points.push_back({g, t, e});
    return points;
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& c) {
    if (c.seeds.empty()) throw ConfigError("config: seeds must be nonempty");
    detail::require_sorted(c.gamma_grid, "gamma");
    detail::require_sorted(c.t_minorize_grid, "t_minorize");
    detail::require_sorted(c.epsilon_grid, "epsilon");
    if (!std::is_sorted(c.n_grid.begin(), c.n_grid.end())) throw ConfigError("config: n grid must be sorted ascending");
    if (!c.instance_file.empty() && (!c.gamma_grid.empty() || !c.t_minorize_grid.empty()))
        throw ConfigError("config: gamma/t_minorize grids only apply to hard-family instances");
    if (!(c.epsilon > 0.0)) throw ConfigError("config: epsilon must be positive");
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("config: delta must be in (0,1)");
}

inline std::string config_hash(const ExperimentConfig& c) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a(detail::canonical_config_string(c))));
    return buf;
}

// Runs every (grid point, seed) trial. Trials execute in a worker pool;
// records land in pre-assigned slots so the output order is canonical
// (grid point, then seed) regardless of completion order. `skip` entries
// (instance_id, seed) are carried over from a previous partial run.
inline std::vector<ExperimentRecord> run_sweep(
    const ExperimentConfig& cfg, int n_workers = 0,
    const std::set<std::pair<std::string, uint64_t>>* skip = nullptr) {
    validate_config(cfg);
    const std::string hash = config_hash(cfg);

    struct PointData {
        std::string id;
        TabularMdp mdp;
        QFunction q_star;
        LearnerSchedule schedule;
        detail::GridPoint gp;
    };

    std::vector<PointData> points;
    for (const auto& gp : detail::expand_grid(cfg)) {
        if (cfg.instance_file.empty()) {
            const HardInstance h = make_hard_instance(1.0 / gp.t_minorize, gp.gamma);
            auto [v, q, pi] = solve_value_iteration(h.mdp, 1e-10);
            LearnerSchedule sched = make_schedule(cfg.setting, 2, 2, gp.gamma, gp.epsilon, cfg.delta,
                                                  gp.t_minorize, cfg.constants, cfg.beta, cfg.lipschitz_L,
                                                  cfg.gap_Delta);
            points.push_back({"hard-t" + detail::fmt_g(gp.t_minorize) + "-g" + detail::fmt_g(gp.gamma),
                              h.mdp, std::move(q), std::move(sched), gp});
        } else {
            TabularMdp mdp = read_mdp_file(cfg.instance_file);
            auto [v, q, pi] = solve_value_iteration(mdp, 1e-10);
            double t_bound = cfg.t_minorize_bound;
            if (t_bound <= 0.0) {
                const MixingReport rep = verify_equivalence(mdp.policy_kernel(pi));
                t_bound = rep.t_minorize;
            }
            const double file_gamma = mdp.gamma();
            LearnerSchedule sched = make_schedule(cfg.setting, mdp.n_states(), mdp.n_actions(),
                                                  file_gamma, gp.epsilon, cfg.delta, t_bound,
                                                  cfg.constants, cfg.beta, cfg.lipschitz_L, cfg.gap_Delta);
            std::string id = "file-" + std::filesystem::path(cfg.instance_file).filename().string();
            points.push_back({std::move(id), std::move(mdp), std::move(q), std::move(sched),
                              {file_gamma, t_bound, gp.epsilon}});
        }
    }

    struct Trial {
        size_t point;
        uint64_t seed;
    };
    std::vector<Trial> trials;
    std::vector<ExperimentRecord> records;
    for (size_t i = 0; i < points.size(); ++i) {
        for (uint64_t seed : cfg.seeds) {
            if (skip && skip->count({points[i].id, seed})) continue;
            trials.push_back({i, seed});
        }
    }
    records.resize(trials.size());

    std::atomic<size_t> cursor{0};
    auto worker = [&]() {
        for (;;) {
            const size_t idx = cursor.fetch_add(1);
            if (idx >= trials.size()) return;
            const Trial& tr = trials[idx];
            const PointData& pd = points[tr.point];
            ExperimentRecord rec;
            rec.config_hash = hash;
            rec.instance_id = pd.id;
            rec.seed = tr.seed;
            rec.setting = setting_name(cfg.setting);
            rec.gamma = pd.gp.gamma;
            rec.t_minorize = pd.gp.t_minorize;
            rec.epsilon = pd.gp.epsilon;
            try {
                GenerativeModel gm(pd.mdp, tr.seed);
                const LearnerResult res = run_combined(gm, pd.schedule, &pd.q_star);
                rec.samples_used = res.samples_used;
                rec.final_error = sup_norm_diff(res.q_hat, pd.q_star);
                rec.success = rec.final_error <= pd.gp.epsilon;
                rec.per_epoch_errors = res.per_epoch_errors;
                rec.wall_ms = res.wall_seconds * 1000.0;
            } catch (const std::exception& e) {
                rec.success = false;
                rec.final_error = std::nan("");
                rec.note = e.what();
            }
            records[idx] = std::move(rec);
        }
    };

    int jobs = n_workers > 0 ? n_workers : static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(trials.size())));
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return records;
}

inline void sort_records(std::vector<ExperimentRecord>& records) {
    std::sort(records.begin(), records.end(), [](const ExperimentRecord& a, const ExperimentRecord& b) {
        return std::tie(a.instance_id, a.gamma, a.t_minorize, a.epsilon, a.seed) <
               std::tie(b.instance_id, b.gamma, b.t_minorize, b.epsilon, b.seed);
    });
}

struct ScalingFit {
    double slope = 0.0;
    double stderr = 0.0;
    int points = 0;
};

// Log-log least squares of samples against the axis variable (1/(1-gamma),
// 1/epsilon, or t_minorize). Fits per-grid-point means, needs >= 3 distinct
// grid values; errored trials are excluded.
inline ScalingFit fit_scaling(const std::vector<ExperimentRecord>& records, SweepAxis axis) {
    std::map<double, std::pair<double, int>> byx;  // x -> (sum log y, count)
    for (const auto& r : records) {
        if (!r.note.empty() || r.samples_used <= 0) continue;
        double x = 0.0;
        switch (axis) {
            case SweepAxis::Gamma: x = 1.0 / (1.0 - r.gamma); break;
            case SweepAxis::Epsilon: x = 1.0 / r.epsilon; break;
            case SweepAxis::TMinorize: x = r.t_minorize; break;
        }
        auto& acc = byx[x];
        acc.first += std::log(static_cast<double>(r.samples_used));
        acc.second += 1;
    }
    if (byx.size() < 3) throw std::invalid_argument("fit_scaling: need at least 3 grid points on the axis");
    Vec xs, ys;
    for (const auto& [x, acc] : byx) {
        xs.push_back(std::log(x));
        ys.push_back(acc.first / acc.second);
    }
    const LineFit fit = least_squares(xs, ys);
    return {fit.slope, fit.slope_stderr, static_cast<int>(byx.size())};
}

// Canonical serialization of the deterministic fields (wall time excluded:
// it is the one non-reproducible column). Byte-equality of digests is the
// determinism contract.
inline std::string records_digest(std::vector<ExperimentRecord> records) {
    sort_records(records);
    std::ostringstream os;
    for (const auto& r : records) {
        os << r.config_hash << "|" << r.instance_id << "|" << r.seed << "|" << detail::fmt_double(r.gamma)
           << "|" << detail::fmt_double(r.t_minorize) << "|" << detail::fmt_double(r.epsilon) << "|"
           << r.setting << "|" << r.samples_used << "|" << detail::fmt_double(r.final_error) << "|"
           << (r.success ? 1 : 0);
        for (double e : r.per_epoch_errors) os << "|" << detail::fmt_double(e);
        os << "\n";
    }
    return os.str();
}

inline const char* kRecordCsvHeader = "instance,seed,gamma,t_minorize,epsilon,setting,samples,error,success,wall_ms";

// Writes the delimited table plus the machine-readable sidecar (full record
// detail, config hash, and regression sections for every axis with >= 3
// grid points). Records are emitted in canonical order.
inline void emit_report(std::vector<ExperimentRecord> records, const std::string& csv_path,
                        const std::string& sidecar_path) {
    if (records.empty()) throw std::invalid_argument("emit_report: empty record set");
    sort_records(records);

    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("emit_report: cannot write " + csv_path);
    csv << kRecordCsvHeader << "\n";
    for (const auto& r : records) {
        csv << r.instance_id << "," << r.seed << "," << detail::fmt_double(r.gamma) << ","
            << detail::fmt_double(r.t_minorize) << "," << detail::fmt_double(r.epsilon) << ","
            << r.setting << "," << r.samples_used << "," << detail::fmt_double(r.final_error) << ","
            << (r.success ? 1 : 0) << "," << detail::fmt_double(r.wall_ms) << "\n";
    }
    csv.close();
    if (!csv) throw std::runtime_error("emit_report: I/O failure writing " + csv_path);

    nlohmann::json j;
    j["config_hash"] = records.front().config_hash;
    j["records"] = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json jr;
        jr["instance"] = r.instance_id;
        jr["seed"] = r.seed;
        jr["gamma"] = r.gamma;
        jr["t_minorize"] = r.t_minorize;
        jr["epsilon"] = r.epsilon;
        jr["setting"] = r.setting;
        jr["samples"] = r.samples_used;
        jr["error"] = r.final_error;
        jr["success"] = r.success;
        jr["wall_ms"] = r.wall_ms;
        jr["per_epoch_errors"] = r.per_epoch_errors;
        if (!r.note.empty()) jr["note"] = r.note;
        j["records"].push_back(std::move(jr));
    }
    for (SweepAxis axis : {SweepAxis::Gamma, SweepAxis::Epsilon, SweepAxis::TMinorize}) {
        try {
            const ScalingFit fit = fit_scaling(records, axis);
            j["fits"][axis_name(axis)] = {{"slope", fit.slope}, {"stderr", fit.stderr}, {"points", fit.points}};
        } catch (const std::invalid_argument&) {
            // fewer than 3 grid points on this axis: no regression section
        }
    }
    std::ofstream side(sidecar_path);
    if (!side) throw std::runtime_error("emit_report: cannot write " + sidecar_path);
    side << j.dump(2) << "\n";
    if (!side) throw std::runtime_error("emit_report: I/O failure writing " + sidecar_path);
}

// Reads records back from a sidecar file.
inline std::vector<ExperimentRecord> load_records(const std::string& sidecar_path) {
    std::ifstream in(sidecar_path);
    if (!in) throw std::runtime_error("load_records: cannot open " + sidecar_path);
    nlohmann::json j;
    in >> j;
    std::vector<ExperimentRecord> records;
    for (const auto& jr : j.at("records")) {
        ExperimentRecord r;
        r.config_hash = j.value("config_hash", "");
        r.instance_id = jr.at("instance").get<std::string>();
        r.seed = jr.at("seed").get<uint64_t>();
        r.gamma = jr.at("gamma").get<double>();
        r.t_minorize = jr.at("t_minorize").get<double>();
        r.epsilon = jr.at("epsilon").get<double>();
        r.setting = jr.at("setting").get<std::string>();
        r.samples_used = jr.at("samples").get<long long>();
        r.final_error = jr.at("error").get<double>();
        r.success = jr.at("success").get<bool>();
        r.wall_ms = jr.at("wall_ms").get<double>();
        r.per_epoch_errors = jr.at("per_epoch_errors").get<std::vector<double>>();
        r.note = jr.value("note", "");
        records.push_back(std::move(r));
    }
    return records;
}

// File-backed sweep: if the sidecar at output_path already holds records for
// this exact config, the completed (grid point, seed) trials are skipped and
// the merged result is re-emitted in canonical order.
inline std::vector<ExperimentRecord> run_sweep_resumable(const ExperimentConfig& cfg, int n_workers = 0) {
    validate_config(cfg);
    if (cfg.output_path.empty()) throw ConfigError("config: output path required for a file-backed sweep");
    const std::string csv_path = cfg.output_path + ".csv";
    const std::string sidecar_path = cfg.output_path + ".json";
    const std::string hash = config_hash(cfg);

    std::vector<ExperimentRecord> done;
    std::set<std::pair<std::string, uint64_t>> skip;
    if (std::filesystem::exists(sidecar_path)) {
        try {
            std::vector<ExperimentRecord> previous = load_records(sidecar_path);
            for (auto& r : previous) {
                if (r.config_hash == hash && r.note.empty()) {
                    skip.insert({r.instance_id, r.seed});
                    done.push_back(std::move(r));
                }
            }
        } catch (const std::exception&) {
            // unreadable previous output: recompute everything
            done.clear();
            skip.clear();
        }
    }

    std::vector<ExperimentRecord> fresh = run_sweep(cfg, n_workers, skip.empty() ? nullptr : &skip);
    done.insert(done.end(), std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()));
    sort_records(done);
    emit_report(done, csv_path, sidecar_path);
    return done;
}

// --- JSON config files -------------------------------------------------------

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c;
    try {
        const auto& inst = j.at("instance");
        if (inst.contains("file")) {
            c.instance_file = inst.at("file").get<std::string>();
            c.t_minorize_bound = inst.value("t_minorize_bound", 0.0);
        } else {
            const auto& hard = inst.at("hard");
            c.hard_t_minorize = hard.contains("t_minorize") ? hard.at("t_minorize").get<double>()
                                                            : 1.0 / hard.at("p").get<double>();
            c.base_gamma = hard.at("gamma").get<double>();
        }
        c.setting = setting_from_name(j.at("setting").get<std::string>());
        c.epsilon = j.at("epsilon").get<double>();
        c.delta = j.at("delta").get<double>();
        c.seeds = j.at("seeds").get<std::vector<uint64_t>>();
        if (j.contains("sweep")) {
            const auto& sw = j.at("sweep");
            c.gamma_grid = sw.value("gamma", Vec{});
            c.t_minorize_grid = sw.value("t_minorize", Vec{});
            c.epsilon_grid = sw.value("epsilon", Vec{});
            c.n_grid = sw.value("n", std::vector<long long>{});
        }
        if (j.contains("constants")) {
            const auto& cc = j.at("constants");
            c.constants.c0 = cc.value("c0", 1.0);
            c.constants.c1 = cc.value("c1", 1.0);
            c.constants.c2 = cc.value("c2", 1.0);
        }
        c.beta = j.value("beta", 0.1);
        if (j.contains("lipschitz_L")) c.lipschitz_L = j.at("lipschitz_L").get<double>();
        if (j.contains("gap_Delta")) c.gap_Delta = j.at("gap_Delta").get<double>();
        c.output_path = j.value("output", "");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    validate_config(c);
    return c;
}

}  // namespace mdplab

#endif
