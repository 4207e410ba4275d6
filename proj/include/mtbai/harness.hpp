// harness.hpp
//
// Experiment driver: config ingestion, replicated simulation with
// per-replicate RNG streams, aggregation, and the flat-file outputs.
//
// Determinism contract: identical (config, base seed) produce identical
// records whether replicates run serially or across threads; wall_ms is the
// one measured (non-reproducible) field.
#pragma once
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mtbai/errors.hpp"
#include "mtbai/format.hpp"
#include "mtbai/instance_io.hpp"
#include "mtbai/model.hpp"
#include "mtbai/oracle.hpp"
#include "mtbai/policies.hpp"

namespace mtbai {

// Two-sided 97.5% normal quantile used for the confidence columns.
inline constexpr double kCiMultiplier = 2.2414;

struct ExperimentConfig {
    ModelTensor instance;
    std::string algo = "osrl"; // osrl | tas | both
    double delta_g = 0.1;
    double delta_h = 0.1;
    int recompute_period = 0;  // 0 -> X*G*H
    SolverOptions solver{};
    int runs = 1;
    std::uint64_t seed = 1;
    int threads = 1;
    bool log_series = false;
    TasTaskMode tas_task_mode = TasTaskMode::one_random;

    explicit ExperimentConfig(ModelTensor m) : instance(std::move(m)) {}

    void validate() const {
        if (algo != "osrl" && algo != "tas" && algo != "both")
            throw config_error("algo must be one of osrl|tas|both, got \"" + algo + "\"");
        if (!(delta_g > 0.0 && delta_g < 1.0) || !(delta_h > 0.0 && delta_h < 1.0))
            throw config_error("risks delta_g, delta_h must lie in (0,1)");
        if (runs < 1) throw config_error("runs must be >= 1");
        if (threads < 1) throw config_error("threads must be >= 1");
        if (recompute_period < 0) throw config_error("recompute_period must be >= 0");
        solver.validate();
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::vector<std::string>& known,
                                const std::string& where) {
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw config_error(where + ": unknown key \"" + key + "\"");
}

inline double require_number(const nlohmann::json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw config_error("config: \"" + key + "\" must be a number");
    return j[key].get<double>();
}

inline std::int64_t require_integer(const nlohmann::json& j, const std::string& key,
                                    std::int64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) throw config_error("config: \"" + key + "\" must be an integer");
    return j[key].get<std::int64_t>();
}

} // namespace detail

// Parse a config JSON object. Unknown keys anywhere are rejected.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw config_error("config: expected a JSON object");
    detail::reject_unknown_keys(
        j,
        {"instance", "instance_file", "algo", "delta_g", "delta_h", "sigma", "recompute_period",
         "warmstart_mix", "solver", "runs", "seed", "threads", "log_series", "tas_task_mode"},
        "config");

    const bool has_inline = j.contains("instance"), has_file = j.contains("instance_file");
    if (has_inline == has_file)
        throw config_error("config: exactly one of \"instance\" / \"instance_file\" is required");
    ModelTensor instance = has_inline ? model_from_json(j["instance"], "config.instance")
                                      : load_instance(j["instance_file"].get<std::string>());

    ExperimentConfig cfg(std::move(instance));
    if (j.contains("algo")) cfg.algo = j["algo"].get<std::string>();
    cfg.delta_g = detail::require_number(j, "delta_g", cfg.delta_g);
    cfg.delta_h = detail::require_number(j, "delta_h", cfg.delta_h);
    cfg.solver.sigma = detail::require_number(j, "sigma", cfg.solver.sigma);
    cfg.recompute_period = static_cast<int>(detail::require_integer(j, "recompute_period", 0));
    cfg.solver.warmstart_mix = detail::require_number(j, "warmstart_mix", cfg.solver.warmstart_mix);
    cfg.runs = static_cast<int>(detail::require_integer(j, "runs", cfg.runs));
    cfg.seed = static_cast<std::uint64_t>(detail::require_integer(j, "seed",
                                                                  static_cast<std::int64_t>(cfg.seed)));
    cfg.threads = static_cast<int>(detail::require_integer(j, "threads", cfg.threads));
    if (j.contains("log_series")) {
        if (!j["log_series"].is_boolean()) throw config_error("config: \"log_series\" must be boolean");
        cfg.log_series = j["log_series"].get<bool>();
    }
    if (j.contains("tas_task_mode")) {
        const std::string mode = j["tas_task_mode"].get<std::string>();
        if (mode == "one-random") cfg.tas_task_mode = TasTaskMode::one_random;
        else if (mode == "all-sum") cfg.tas_task_mode = TasTaskMode::all_sum;
        else throw config_error("config: tas_task_mode must be one-random|all-sum");
    }
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        if (!s.is_object()) throw config_error("config: \"solver\" must be an object");
        detail::reject_unknown_keys(
            s, {"max_iters_cold", "max_iters_warm", "tol", "grad_clip", "lipschitz_floor",
                "clamp_epsilon"},
            "config.solver");
        cfg.solver.max_iters_cold =
            static_cast<int>(detail::require_integer(s, "max_iters_cold", cfg.solver.max_iters_cold));
        cfg.solver.max_iters_warm =
            static_cast<int>(detail::require_integer(s, "max_iters_warm", cfg.solver.max_iters_warm));
        cfg.solver.tol = detail::require_number(s, "tol", cfg.solver.tol);
        cfg.solver.grad_clip = detail::require_number(s, "grad_clip", cfg.solver.grad_clip);
        cfg.solver.lipschitz_floor =
            detail::require_number(s, "lipschitz_floor", cfg.solver.lipschitz_floor);
        cfg.solver.clamp.epsilon = detail::require_number(s, "clamp_epsilon", cfg.solver.clamp.epsilon);
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config file " + path + ": " + e.what());
    }
    return parse_config(j);
}

struct RunRecord {
    std::int64_t run_id = 0;
    std::uint64_t seed = 0;
    std::string algo;
    double delta_g = 0.0, delta_h = 0.0;
    std::int64_t tau_g = 0, tau_h = 0, tau_total = 0;
    int g_hat = -1;
    bool g_correct = false;
    bool h_all_correct = false;
    std::int64_t wall_ms = 0;
    std::vector<std::int64_t> counts; // phase-1 counts (osrl) / full counts (tas)
    std::int64_t tracking_violations = 0;
    bool failed = false;
    std::string fail_reason;
};

struct SeriesPoint {
    std::int64_t run_id = 0;
    std::int64_t t = 0;
    double mu_hat_l2 = 0.0;
    double dmu_l2_normalized = 0.0;
    double c_sigma_inv = 0.0;
    double q_change_l2_normalized = 0.0;
    double q_change_linf = 0.0;
};

struct ExperimentResult {
    std::vector<RunRecord> records;
    std::vector<SeriesPoint> series;
};

namespace detail {

struct ReplicateOutput {
    std::vector<RunRecord> records;
    std::vector<SeriesPoint> series;
};

inline ReplicateOutput run_replicate(const ExperimentConfig& cfg, const StructuredVerdict& truth,
                                     std::int64_t run_id) {
    ReplicateOutput out;
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(run_id);

    auto base_record = [&](const char* algo) {
        RunRecord r;
        r.run_id = run_id;
        r.seed = seed;
        r.algo = algo;
        r.delta_g = cfg.delta_g;
        r.delta_h = cfg.delta_h;
        return r;
    };

    if (cfg.algo == "osrl" || cfg.algo == "both") {
        RunRecord r = base_record("osrl");
        const auto t0 = std::chrono::steady_clock::now();
        try {
            Rng rng(seed);
            Phase1Config p1;
            p1.delta_g = cfg.delta_g;
            p1.delta_h = cfg.delta_h;
            p1.solver = cfg.solver;
            p1.recompute_period = cfg.recompute_period;
            p1.thresholds = ThresholdParams::osrl();
            p1.record_series = cfg.log_series;
            Phase1State st = run_tracking_loop(cfg.instance, p1, rng);
            r.tau_g = st.counts().round();
            r.g_hat = phase1_decide(st);
            r.counts = st.counts().pulls();
            r.tracking_violations = st.tracking_violations();
            const Phase2Result p2 = phase2_run(cfg.instance, r.g_hat, cfg.delta_h, cfg.solver, rng);
            r.tau_h = p2.tau_h;
            r.tau_total = r.tau_g + r.tau_h;
            r.tracking_violations += p2.tracking_violations;
            r.g_correct = r.g_hat == truth.best_representation;
            r.h_all_correct = r.g_correct;
            for (int x = 0; x < cfg.instance.tasks() && r.h_all_correct; ++x)
                if (p2.h_hat[x] != truth.best_predictors[x]) r.h_all_correct = false;
            for (const OracleTrace& tr : st.series())
                out.series.push_back({run_id, tr.t, tr.mu_hat_l2, tr.dmu_l2_normalized,
                                      tr.c_sigma_inv, tr.q_change_l2_normalized, tr.q_change_linf});
        } catch (const std::exception& e) {
            r.failed = true;
            r.fail_reason = e.what();
        }
        r.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
        out.records.push_back(std::move(r));
    }

    if (cfg.algo == "tas" || cfg.algo == "both") {
        RunRecord r = base_record("tas");
        const auto t0 = std::chrono::steady_clock::now();
        try {
            Rng rng(seed ^ 0x9E3779B97F4A7C15ULL); // independent stream per algo
            const TasResult res =
                tas_baseline(cfg.instance, cfg.delta_g, cfg.tas_task_mode, cfg.solver, rng);
            r.tau_total = res.tau;
            r.tracking_violations = res.tracking_violations;
            r.counts = res.counts;
            r.g_correct = true;
            r.h_all_correct = true;
            for (size_t i = 0; i < res.tasks.size(); ++i) {
                const int x = res.tasks[i];
                if (res.best_pairs[i].first != truth.best_representation) r.g_correct = false;
                if (res.best_pairs[i] !=
                    GhPair{truth.best_representation, truth.best_predictors[x]})
                    r.h_all_correct = false;
            }
            r.g_hat = res.best_pairs.empty() ? -1 : res.best_pairs.front().first;
        } catch (const std::exception& e) {
            r.failed = true;
            r.fail_reason = e.what();
        }
        r.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
        out.records.push_back(std::move(r));
    }
    return out;
}

} // namespace detail

// Executes cfg.runs independent replicates (seed_i = seed + i), serially or
// across threads; the result is identical either way.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto truth = membership_check(cfg.instance);
    if (!truth.in_class)
        throw config_error("instance must lie inside the structured class "
                           "(one strictly dominant representation shared by every task)");

    std::vector<detail::ReplicateOutput> outputs(cfg.runs);
    const int workers = std::min(cfg.threads, cfg.runs);
    if (workers <= 1) {
        for (int i = 0; i < cfg.runs; ++i)
            outputs[i] = detail::run_replicate(cfg, truth, i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                while (true) {
                    const int i = next.fetch_add(1);
                    if (i >= cfg.runs) return;
                    outputs[i] = detail::run_replicate(cfg, truth, i);
                }
            });
        for (auto& th : pool) th.join();
    }

    ExperimentResult result;
    for (auto& o : outputs) {
        for (auto& r : o.records) result.records.push_back(std::move(r));
        for (auto& s : o.series) result.series.push_back(std::move(s));
    }
    return result;
}

// ---- aggregation ------------------------------------------------------------

struct SummaryRow {
    std::string algo;
    std::string phase; // phase1 | phase2 | total
    double delta_g = 0.0, delta_h = 0.0;
    int n = 0;
    double mean = 0.0, ci_half_width = 0.0, min = 0.0, max = 0.0, stddev = 0.0;
};

struct SummaryResult {
    std::vector<SummaryRow> rows;
    std::vector<std::string> warnings;
};

namespace detail {

struct GroupStats {
    std::vector<double> values;
};

inline void push_summary(SummaryResult& out, const std::string& algo, const std::string& phase,
                         double dg, double dh, const std::vector<double>& v) {
    if (v.size() < 2) {
        out.warnings.push_back("group (" + algo + ", " + phase + ", delta_g=" + fmt(dg) +
                               ") omitted: fewer than 2 successful records");
        return;
    }
    SummaryRow row;
    row.algo = algo;
    row.phase = phase;
    row.delta_g = dg;
    row.delta_h = dh;
    row.n = static_cast<int>(v.size());
    double sum = 0.0, mn = v[0], mx = v[0];
    for (double x : v) {
        sum += x;
        mn = std::min(mn, x);
        mx = std::max(mx, x);
    }
    row.mean = sum / row.n;
    double ss = 0.0;
    for (double x : v) ss += (x - row.mean) * (x - row.mean);
    row.stddev = std::sqrt(ss / (row.n - 1));
    row.ci_half_width = kCiMultiplier * row.stddev / std::sqrt(static_cast<double>(row.n));
    row.min = mn;
    row.max = mx;
    out.rows.push_back(row);
}

} // namespace detail

// Per (algo, phase, risk) statistics over successful records.
inline SummaryResult summarize(const std::vector<RunRecord>& records) {
    // group key: (algo, delta_g, delta_h); deterministic order of appearance
    struct Key {
        std::string algo;
        double dg, dh;
        bool operator==(const Key&) const = default;
    };
    std::vector<Key> keys;
    auto key_index = [&](const Key& k) {
        for (size_t i = 0; i < keys.size(); ++i)
            if (keys[i] == k) return i;
        keys.push_back(k);
        return keys.size() - 1;
    };
    std::vector<std::vector<const RunRecord*>> groups;
    for (const auto& r : records) {
        if (r.failed) continue;
        const size_t i = key_index({r.algo, r.delta_g, r.delta_h});
        if (groups.size() <= i) groups.resize(i + 1);
        groups[i].push_back(&r);
    }

    SummaryResult out;
    for (size_t i = 0; i < keys.size(); ++i) {
        const auto& key = keys[i];
        std::vector<double> tg, th, tt;
        for (const RunRecord* r : groups[i]) {
            tt.push_back(static_cast<double>(r->tau_total));
            if (r->algo == "osrl") {
                tg.push_back(static_cast<double>(r->tau_g));
                th.push_back(static_cast<double>(r->tau_h));
            }
        }
        if (key.algo == "osrl") {
            detail::push_summary(out, key.algo, "total", key.dg, key.dh, tt);
            detail::push_summary(out, key.algo, "phase1", key.dg, key.dh, tg);
            detail::push_summary(out, key.algo, "phase2", key.dg, key.dh, th);
        } else {
            detail::push_summary(out, key.algo, "total", key.dg, key.dh, tt);
        }
    }
    return out;
}

// ---- file outputs -----------------------------------------------------------

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write output file: " + p.string());
    return out;
}

} // namespace detail

// Writes runs.csv, alloc.csv, series.csv, summary.csv and summary.json.
// Failed replicates are excluded from every file and reported in the count
// returned. alloc.csv stores the phase-1 stopping counts for osrl records
// and the full-run counts for tas records.
inline int emit_outputs(const ExperimentResult& result, const ModelTensor& instance,
                        const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " +
                                     ec.message());

    int failed = 0;
    {
        auto out = detail::open_out(dir / "runs.csv");
        out << "run_id,seed,algo,delta_g,delta_h,tau_g,tau_h,tau_total,g_hat,g_correct,"
               "h_all_correct,wall_ms\n";
        for (const auto& r : result.records) {
            if (r.failed) {
                ++failed;
                continue;
            }
            out << fmt(r.run_id) << ',' << fmt(r.seed) << ',' << r.algo << ',' << fmt(r.delta_g)
                << ',' << fmt(r.delta_h) << ',' << fmt(r.tau_g) << ',' << fmt(r.tau_h) << ','
                << fmt(r.tau_total) << ',' << fmt(r.g_hat) << ',' << fmt(r.g_correct) << ','
                << fmt(r.h_all_correct) << ',' << fmt(r.wall_ms) << '\n';
        }
    }
    {
        auto out = detail::open_out(dir / "alloc.csv");
        out << "run_id,x,g,h,count\n";
        for (const auto& r : result.records) {
            if (r.failed) continue;
            for (int x = 0; x < instance.tasks(); ++x)
                for (int g = 0; g < instance.representations(); ++g)
                    for (int h = 0; h < instance.predictors(); ++h)
                        out << fmt(r.run_id) << ',' << fmt(x) << ',' << fmt(g) << ',' << fmt(h)
                            << ',' << fmt(r.counts.empty()
                                              ? std::int64_t{0}
                                              : r.counts[instance.flat(x, g, h)])
                            << '\n';
        }
    }
    {
        auto out = detail::open_out(dir / "series.csv");
        out << "run_id,t,mu_hat_l2,dmu_l2_normalized,c_sigma_inv,q_change_l2_normalized,"
               "q_change_linf\n";
        for (const auto& s : result.series)
            out << fmt(s.run_id) << ',' << fmt(s.t) << ',' << fmt(s.mu_hat_l2) << ','
                << fmt(s.dmu_l2_normalized) << ',' << fmt(s.c_sigma_inv) << ','
                << fmt(s.q_change_l2_normalized) << ',' << fmt(s.q_change_linf) << '\n';
    }
    const SummaryResult summary = summarize(result.records);
    {
        auto out = detail::open_out(dir / "summary.csv");
        out << "algo,phase,delta_g,delta_h,n,mean,ci_half_width,min,max,std\n";
        for (const auto& row : summary.rows)
            out << row.algo << ',' << row.phase << ',' << fmt(row.delta_g) << ','
                << fmt(row.delta_h) << ',' << fmt(row.n) << ',' << fmt(row.mean) << ','
                << fmt(row.ci_half_width) << ',' << fmt(row.min) << ',' << fmt(row.max) << ','
                << fmt(row.stddev) << '\n';
    }
    {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : summary.rows)
            rows.push_back({{"algo", row.algo},
                            {"phase", row.phase},
                            {"delta_g", row.delta_g},
                            {"delta_h", row.delta_h},
                            {"n", row.n},
                            {"mean", row.mean},
                            {"ci_half_width", row.ci_half_width},
                            {"min", row.min},
                            {"max", row.max},
                            {"std", row.stddev}});
        auto out = detail::open_out(dir / "summary.json");
        out << rows.dump(2) << '\n';
    }
    return failed;
}

// Rebuilds summary rows from a runs.csv written by emit_outputs.
inline SummaryResult summarize_csv(const std::string& runs_csv_path) {
    const CsvTable t = read_csv(runs_csv_path);
    for (const char* col : {"run_id", "algo", "delta_g", "delta_h", "tau_g", "tau_h", "tau_total"})
        if (t.column(col) < 0)
            throw config_error(runs_csv_path + ": missing column \"" + std::string(col) + "\"");
    std::vector<RunRecord> records;
    records.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        RunRecord r;
        r.run_id = parse_int(row[t.column("run_id")], runs_csv_path);
        r.algo = row[t.column("algo")];
        r.delta_g = parse_double(row[t.column("delta_g")], runs_csv_path);
        r.delta_h = parse_double(row[t.column("delta_h")], runs_csv_path);
        r.tau_g = parse_int(row[t.column("tau_g")], runs_csv_path);
        r.tau_h = parse_int(row[t.column("tau_h")], runs_csv_path);
        r.tau_total = parse_int(row[t.column("tau_total")], runs_csv_path);
        records.push_back(std::move(r));
    }
    return summarize(records);
}

} // namespace mtbai
