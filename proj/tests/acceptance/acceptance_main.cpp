// Acceptance suite.
//
//   acceptance run   --artifacts DIR [--cli PATH]
//       executes the Monte-Carlo batches once on the symmetric two-task
//       instance and stores every artifact needed by the checks
//   acceptance check N --artifacts DIR
//       evaluates criterion N against the stored artifacts at its pinned
//       tolerance, printing one PASS/FAIL line (exit 1 on FAIL)
//
// Batches (2 tasks x 3 representations x 2 predictors, sigma = 1e5,
// recompute period 12, warm-start mix 0.5):
//   delta = 0.10: 500 runs of the two-phase algorithm (series logged),
//                 200 runs of the baseline
//   delta = 0.05: 200 + 200
//   delta = 0.01: 200 + 200
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtbai/mtbai.hpp"
#include "test_fixtures.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mtbai;

namespace {

struct Batch {
    std::string name;
    double delta;
    std::string algo;
    int runs;
    std::uint64_t seed;
    bool series;
};

const std::vector<Batch> kBatches = {
    {"d010_osrl", 0.10, "osrl", 500, 10000, true},
    {"d010_tas", 0.10, "tas", 200, 20000, false},
    {"d005_osrl", 0.05, "osrl", 200, 30000, false},
    {"d005_tas", 0.05, "tas", 200, 40000, false},
    {"d001_osrl", 0.01, "osrl", 200, 50000, false},
    {"d001_tas", 0.01, "tas", 200, 60000, false},
};

ExperimentConfig batch_config(const Batch& b) {
    ExperimentConfig cfg(symmetric_two_task_model());
    cfg.algo = b.algo;
    cfg.delta_g = cfg.delta_h = b.delta;
    cfg.recompute_period = 12;
    cfg.runs = b.runs;
    cfg.seed = b.seed;
    cfg.threads = 2;
    cfg.log_series = b.series;
    cfg.tas_task_mode = TasTaskMode::one_random;
    return cfg;
}

int run_cli(const std::string& cli, const std::string& args, const fs::path& stdout_file) {
    const std::string cmd = cli + " " + args + " > " + stdout_file.string() + " 2>&1";
    return std::system(cmd.c_str());
}

// ---------------------------------------------------------------- run mode

int do_run(const fs::path& dir, const std::string& cli, int divisor) {
    fs::create_directories(dir);
    json stats;
    std::int64_t violations = 0;

    for (Batch b : kBatches) {
        b.runs = std::max(2, b.runs / divisor);
        std::cout << "batch " << b.name << ": " << b.runs << " runs at delta=" << b.delta
                  << "...\n"
                  << std::flush;
        const auto t0 = std::chrono::steady_clock::now();
        const ExperimentConfig cfg = batch_config(b);
        const ExperimentResult result = run_experiment(cfg);
        const int failed = emit_outputs(result, cfg.instance, (dir / b.name).string());
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::int64_t batch_viol = 0;
        for (const auto& r : result.records) batch_viol += r.tracking_violations;
        violations += batch_viol;
        stats["batches"][b.name] = {{"runs", b.runs},
                                    {"failed", failed},
                                    {"seconds", secs},
                                    {"tracking_violations", batch_viol}};
        std::cout << "  done in " << secs << " s, " << failed << " failed replicates\n";
        if (failed > 0) {
            std::cerr << "acceptance runner: replicate failures in batch " << b.name << "\n";
            return 1;
        }
    }
    stats["tracking_violations"] = violations;

    // reference value for the convergence criterion
    SolverOptions opts;
    const OracleSolution ref = solve_allocation(symmetric_two_task_model(), opts);
    stats["true_rho_sigma"] = ref.rho_star;

    // command line surface: oracle (timed, criterion 1), plus smoke runs of
    // simulate / summarize / plot on small inputs
    if (!cli.empty()) {
        const fs::path cfg_path = dir / "canonical_config.json";
        {
            json cfg_json = {
                {"instance", model_to_json(symmetric_two_task_model())},
                {"algo", "both"},
                {"delta_g", 0.1},
                {"delta_h", 0.1},
                {"sigma", 1e5},
                {"recompute_period", 12},
                {"tas_task_mode", "one-random"},
            };
            std::ofstream out(cfg_path);
            out << cfg_json.dump(2) << '\n';
        }
        const auto t0 = std::chrono::steady_clock::now();
        const int rc = run_cli(cli, "oracle --config " + cfg_path.string() + " --sigma 1e5",
                               dir / "oracle_out.json");
        const double oracle_secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        stats["cli"]["oracle_exit"] = rc;
        stats["cli"]["oracle_seconds"] = oracle_secs;
        if (rc != 0) {
            std::cerr << "acceptance runner: oracle subcommand failed\n";
            return 1;
        }

        const int rc_sim = run_cli(cli,
                                   "simulate --config " + cfg_path.string() +
                                       " --runs 2 --seed 99 --algo osrl --threads 2 --out " +
                                       (dir / "cli_smoke").string(),
                                   dir / "cli_simulate_out.txt");
        const int rc_sum = run_cli(cli, "summarize --in " + (dir / "cli_smoke/runs.csv").string() +
                                            " --format markdown",
                                   dir / "cli_summarize_out.txt");
        const int rc_plot = run_cli(cli,
                                    "plot --in " + (dir / "d010_osrl/series.csv").string() +
                                        " --column c_sigma_inv --out " +
                                        (dir / "c_sigma_inv.svg").string() + " --window 51",
                                    dir / "cli_plot_out.txt");
        stats["cli"]["simulate_exit"] = rc_sim;
        stats["cli"]["summarize_exit"] = rc_sum;
        stats["cli"]["plot_exit"] = rc_plot;
        if (rc_sim != 0 || rc_sum != 0 || rc_plot != 0) {
            std::cerr << "acceptance runner: CLI smoke run failed\n";
            return 1;
        }
    }

    std::ofstream out(dir / "stats.json");
    out << stats.dump(2) << '\n';
    std::cout << "artifacts written to " << dir << '\n';
    return 0;
}

// ------------------------------------------------------------- check mode

struct Criterion {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        detail << "    " << (ok ? "ok  " : "BAD ") << what << '\n';
    }
};

json load_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("missing artifact: " + p.string());
    json j;
    in >> j;
    return j;
}

struct RunsData {
    std::vector<std::string> algo;
    std::vector<std::int64_t> run_id, tau_g, tau_h, tau_total;
    std::vector<bool> g_correct, h_all_correct;
};

RunsData load_runs(const fs::path& p) {
    const CsvTable t = read_csv(p.string());
    RunsData d;
    const int ci = t.column("run_id"), ca = t.column("algo"), cg = t.column("tau_g"),
              ch = t.column("tau_h"), ct = t.column("tau_total"), cgc = t.column("g_correct"),
              chc = t.column("h_all_correct");
    for (const auto& row : t.rows) {
        d.run_id.push_back(parse_int(row[ci], "runs.csv"));
        d.algo.push_back(row[ca]);
        d.tau_g.push_back(parse_int(row[cg], "runs.csv"));
        d.tau_h.push_back(parse_int(row[ch], "runs.csv"));
        d.tau_total.push_back(parse_int(row[ct], "runs.csv"));
        d.g_correct.push_back(row[cgc] == "true");
        d.h_all_correct.push_back(row[chc] == "true");
    }
    return d;
}

double mean_of(const std::vector<std::int64_t>& v) {
    double s = 0.0;
    for (auto x : v) s += static_cast<double>(x);
    return v.empty() ? 0.0 : s / v.size();
}

// Published reference rows for the symmetric instance
const double kPublishedQ[2][3][2] = {{{0.18, 5e-3}, {6e-4, 7e-4}, {0.13, 0.18}},
                                  {{0.18, 5e-3}, {0.13, 0.18}, {6e-4, 7e-4}}};
const double kPublishedProps[2][3][2] = {{{0.14, 0.05}, {0.02, 0.02}, {0.12, 0.15}},
                                  {{0.14, 0.05}, {0.12, 0.16}, {0.02, 0.02}}};

int check_criterion(int n, const fs::path& dir) {
    Criterion c;

    switch (n) {
    case 1: {
        // oracle reproduces the published optimal allocation within +/-0.02
        const json stats = load_json(dir / "stats.json");
        const json out = load_json(dir / "oracle_out.json");
        const double secs = stats["cli"]["oracle_seconds"].get<double>();
        c.require(secs <= 60.0, "oracle runtime " + fmt(secs) + " s <= 60 s");
        double worst = 0.0;
        for (int x = 0; x < 2; ++x)
            for (int g = 0; g < 3; ++g)
                for (int h = 0; h < 2; ++h) {
                    const double got = out["q_star"][x][g][h].get<double>();
                    const double want = kPublishedQ[x][g][h];
                    const double err = std::abs(got - want);
                    worst = std::max(worst, err);
                    c.require(err <= 0.02, "q(x" + std::to_string(x + 1) + ",g" +
                                               std::to_string(g + 1) + ",h" + std::to_string(h + 1) +
                                               ") = " + fmt(got) + " vs published " + fmt(want) +
                                               " (|err| = " + fmt(err) + ")");
                }
        c.detail << "    note: worst entrywise deviation " << fmt(worst) << '\n';
        break;
    }
    case 2: {
        const RunsData d = load_runs(dir / "d010_osrl/runs.csv");
        c.require(d.tau_g.size() >= 300, "n = " + std::to_string(d.tau_g.size()) + " >= 300 runs");
        const double mg = mean_of(d.tau_g), mt = mean_of(d.tau_total);
        c.require(std::abs(mg - 3578.38) / 3578.38 <= 0.15,
                  "mean tau_G = " + fmt(mg) + " within 15% of 3578.38 (band [3041.6, 4115.1])");
        c.require(std::abs(mt - 21278.80) / 21278.80 <= 0.15,
                  "mean tau_total = " + fmt(mt) + " within 15% of 21278.80 (band [18087, 24470.6])");
        break;
    }
    case 3: {
        for (const char* tag : {"d010", "d005", "d001"}) {
            const RunsData o = load_runs(dir / (std::string(tag) + "_osrl/runs.csv"));
            const RunsData t = load_runs(dir / (std::string(tag) + "_tas/runs.csv"));
            c.require(o.tau_total.size() >= 200 && t.tau_total.size() >= 200,
                      std::string(tag) + ": >= 200 runs per algorithm");
            const double mo = mean_of(o.tau_total), mt = mean_of(t.tau_total);
            const double gap = (mt - mo) / mt;
            c.require(mo < mt && gap >= 0.10,
                      std::string(tag) + ": two-phase mean " + fmt(mo) + " < baseline mean " +
                          fmt(mt) + ", relative gap " + fmt(gap) + " >= 0.10");
        }
        break;
    }
    case 4: {
        // averaged stopping-time pull proportions against the published row
        const RunsData d = load_runs(dir / "d010_osrl/runs.csv");
        c.require(d.tau_g.size() >= 300, "n >= 300 runs");
        std::map<std::int64_t, std::int64_t> tau_by_run;
        for (size_t i = 0; i < d.run_id.size(); ++i) tau_by_run[d.run_id[i]] = d.tau_g[i];

        const CsvTable alloc = read_csv((dir / "d010_osrl/alloc.csv").string());
        double prop[2][3][2] = {};
        const int cr = alloc.column("run_id"), cx = alloc.column("x"), cg = alloc.column("g"),
                  ch = alloc.column("h"), cc = alloc.column("count");
        for (const auto& row : alloc.rows) {
            const auto tau = tau_by_run.at(parse_int(row[cr], "alloc"));
            prop[parse_int(row[cx], "alloc")][parse_int(row[cg], "alloc")]
                [parse_int(row[ch], "alloc")] +=
                static_cast<double>(parse_int(row[cc], "alloc")) / static_cast<double>(tau);
        }
        const double nruns = static_cast<double>(tau_by_run.size());
        double worst = 0.0;
        for (int x = 0; x < 2; ++x)
            for (int g = 0; g < 3; ++g)
                for (int h = 0; h < 2; ++h) {
                    const double got = prop[x][g][h] / nruns;
                    const double want = kPublishedProps[x][g][h];
                    const double err = std::abs(got - want);
                    worst = std::max(worst, err);
                    c.require(err <= 0.02, "N(x" + std::to_string(x + 1) + ",g" +
                                               std::to_string(g + 1) + ",h" + std::to_string(h + 1) +
                                               ")/tau_G = " + fmt(got) + " vs published " +
                                               fmt(want) + " (|err| = " + fmt(err) + ")");
                }
        c.detail << "    note: worst entrywise deviation " << fmt(worst) << '\n';
        break;
    }
    case 5: {
        const RunsData d = load_runs(dir / "d010_osrl/runs.csv");
        c.require(d.g_correct.size() >= 500,
                  "n = " + std::to_string(d.g_correct.size()) + " >= 500");
        std::int64_t g_wrong = 0, g_right = 0, h_wrong_given_g = 0;
        for (size_t i = 0; i < d.g_correct.size(); ++i) {
            if (!d.g_correct[i]) {
                ++g_wrong;
                continue;
            }
            ++g_right;
            if (!d.h_all_correct[i]) ++h_wrong_given_g;
        }
        const double rate_g = static_cast<double>(g_wrong) / d.g_correct.size();
        const double rate_h = g_right == 0 ? 1.0 : static_cast<double>(h_wrong_given_g) / g_right;
        c.require(rate_g <= 0.1, "representation error rate " + fmt(rate_g) + " <= 0.1");
        c.require(rate_h <= 0.1, "predictor error rate given correct representation " +
                                     fmt(rate_h) + " <= 0.1");
        break;
    }
    case 6: {
        const double m010 = mean_of(load_runs(dir / "d010_osrl/runs.csv").tau_g);
        const double m005 = mean_of(load_runs(dir / "d005_osrl/runs.csv").tau_g);
        const double m001 = mean_of(load_runs(dir / "d001_osrl/runs.csv").tau_g);
        const double inc1 = (m005 - m010) / m010, inc2 = (m001 - m005) / m005;
        c.require(inc1 <= 0.05, "tau_G increase 0.10 -> 0.05: " + fmt(inc1) + " <= 0.05 (means " +
                                    fmt(m010) + " -> " + fmt(m005) + ")");
        c.require(inc2 <= 0.10, "tau_G increase 0.05 -> 0.01: " + fmt(inc2) + " <= 0.10 (means " +
                                    fmt(m005) + " -> " + fmt(m001) + ")");
        break;
    }
    case 7: {
        // property suites, fully runnable standalone
        SolverOptions opts;

        { // envelope supergradient vs central finite differences
            Rng rng(424242);
            int checked = 0, failures = 0;
            while (checked < 100) {
                const ModelTensor m = fixtures::random_instance(rng, 2, 3, 2);
                const auto verdict = membership_check(m);
                if (!verdict.in_class) continue;
                const Allocation q = fixtures::random_positive_allocation(rng, m, true);
                // unique active minimizer only
                std::vector<double> totals;
                for (int g = 0; g < 3; ++g) {
                    if (g == verdict.best_representation) continue;
                    for (int h0 = 0; h0 < 2; ++h0)
                        for (int h1 = 0; h1 < 2; ++h1)
                            totals.push_back(transport_cost(m, 0, {g, h0}, q) +
                                             transport_cost(m, 1, {g, h1}, q));
                }
                std::sort(totals.begin(), totals.end());
                if (totals[1] - totals[0] < 1e-5) continue;

                const auto grad = supergradient(m, q, opts);
                const int narms = m.arms();
                double gmean = 0.0;
                for (double v : grad) gmean += v;
                gmean /= narms;
                double num = 0.0, den = 0.0;
                for (int i = 0; i < narms; ++i) {
                    Allocation qp = q, qm = q;
                    for (int j = 0; j < narms; ++j) {
                        const double dirv = (j == i ? 1.0 : 0.0) - 1.0 / narms;
                        qp.weights[j] += 1e-6 * dirv;
                        qm.weights[j] -= 1e-6 * dirv;
                    }
                    const double fd =
                        (rho_sigma(m, qp, opts.sigma) - rho_sigma(m, qm, opts.sigma)) / 2e-6;
                    const double an = grad[i] - gmean;
                    num += (an - fd) * (an - fd);
                    den += fd * fd;
                }
                if (std::sqrt(num) > 1e-4 * std::max(std::sqrt(den), 1e-8)) ++failures;
                ++checked;
            }
            c.require(failures == 0, "envelope supergradient vs finite differences at 100 interior "
                                     "points (" +
                                         std::to_string(failures) + " failures)");
        }

        { // confusing-set route agreement
            Rng rng(777);
            int done = 0, mismatches = 0;
            while (done < 200) {
                const int G = 2 + static_cast<int>(rng() % 3), H = 1 + static_cast<int>(rng() % 2);
                if (G * H > 8) continue;
                const ModelTensor m = fixtures::random_instance(rng, 1, G, H);
                const auto verdict = membership_check(m);
                if (!verdict.in_class) continue;
                const Allocation eta = fixtures::random_positive_allocation(rng, m);
                int gbar = static_cast<int>(rng() % G);
                if (gbar == verdict.best_representation) gbar = (gbar + 1) % G;
                const GhPair ch{gbar, static_cast<int>(rng() % H)};
                const auto direct = confusing_set(m, 0, ch, eta).members;
                const auto rec = fixtures::recursive_confusing_set(
                    m, 0, ch, eta, verdict.best_representation, verdict.best_predictors[0]);
                const auto subsets = fixtures::consistent_subsets(m, 0, ch, eta);
                if (direct != rec || subsets.size() != 1 || subsets[0] != direct) ++mismatches;
                ++done;
            }
            c.require(mismatches == 0, "direct == recursive == exhaustive confusing sets on 200 "
                                       "instances (" +
                                           std::to_string(mismatches) + " mismatches)");
        }

        { // inner infimum closed form vs 1-D minimization
            Rng rng(888);
            int done = 0, bad = 0;
            while (done < 200) {
                const int G = 2 + static_cast<int>(rng() % 3), H = 1 + static_cast<int>(rng() % 2);
                const ModelTensor m = fixtures::random_instance(rng, 1, G, H);
                const auto verdict = membership_check(m);
                if (!verdict.in_class) continue;
                const Allocation eta = fixtures::random_positive_allocation(rng, m);
                int gbar = static_cast<int>(rng() % G);
                if (gbar == verdict.best_representation) gbar = (gbar + 1) % G;
                const GhPair ch{gbar, static_cast<int>(rng() % H)};
                const double closed = transport_cost(m, 0, ch, eta);
                const double oracle = fixtures::inner_infimum_1d(m, 0, ch, eta);
                if (std::abs(closed - oracle) > 1e-6) ++bad;
                ++done;
            }
            c.require(bad == 0, "inner infimum closed form == 1-D minimization to 1e-6 on 200 "
                                "cases (" +
                                    std::to_string(bad) + " failures)");
        }

        { // tracking bound on every logged trajectory
            const json stats = load_json(dir / "stats.json");
            const std::int64_t v = stats["tracking_violations"].get<std::int64_t>();
            c.require(v == 0, "tracking bound N_t > (sqrt(t) - XGH/2)+ - 1 on every trajectory "
                              "(violations: " +
                                  std::to_string(v) + ")");
        }

        { // constructive feasibility of the split budgets
            Rng rng(9009);
            int done = 0, infeasible = 0;
            while (done < 50) {
                const ModelTensor m = fixtures::random_instance(rng, 2, 3, 2);
                const auto verdict = membership_check(m);
                if (!verdict.in_class) continue;
                const double rhs = kl_binary_risk(0.1);
                const OracleSolution sol = solve_allocation(m, opts);
                Allocation eta(2, 3, 2, std::vector<double>(12, 0.0), false);
                const double r = rho(m, sol.q_star).value;
                if (r <= 0.0) continue;
                for (int i = 0; i < 12; ++i) eta.weights[i] = sol.q_star.weights[i] * rhs / r;
                for (int x = 0; x < 2; ++x) {
                    const ModelTensor red = reduce_to_predictors(m, x, verdict.best_representation);
                    const OracleSolution rs = solve_allocation(red, opts);
                    const double rr =
                        detail::rho_of(red, rs.q_star, membership_check(red).best_representation)
                            .value;
                    for (int h = 0; h < 2; ++h)
                        eta.at(x, verdict.best_representation, h) +=
                            rs.q_star.weights[h] * rhs / rr;
                }
                if (!check_feasibility(m, eta, 0.1, 0.1).feasible) ++infeasible;
                ++done;
            }
            c.require(infeasible == 0, "constructive split-budget feasibility on 50 instances (" +
                                           std::to_string(infeasible) + " infeasible)");
        }

        { // mirror-ascent rate against grid optima
            Rng rng(101);
            int done = 0, violations = 0;
            while (done < 20) {
                const bool three = (rng() % 2) == 0;
                const ModelTensor m = fixtures::random_instance(rng, 1, three ? 3 : 2, 1);
                if (!membership_check(m).in_class) continue;
                SolverOptions ro;
                ro.tol = 1e-14;
                ro.max_iters_cold = 1000;
                const OracleSolution sol = solve_allocation(m, ro, std::nullopt, true);
                double grid = -1.0;
                const int gstar = membership_check(m).best_representation;
                auto eval = [&](std::vector<double> w) {
                    Allocation q(1, m.representations(), 1, std::move(w), false);
                    double v = std::numeric_limits<double>::infinity();
                    for (int g = 0; g < m.representations(); ++g) {
                        if (g == gstar) continue;
                        v = std::min(v, fixtures::inner_infimum_1d(m, 0, {g, 0}, q));
                    }
                    grid = std::max(grid, v - q.l2_norm_sq() / (2.0 * ro.sigma));
                };
                if (three) {
                    for (double a = 0.005; a < 1.0; a += 0.005)
                        for (double b = 0.005; a + b < 1.0; b += 0.005) eval({a, b, 1.0 - a - b});
                } else {
                    for (double a = 0.001; a < 1.0; a += 0.001) eval({a, 1.0 - a});
                }
                const double L = lipschitz_constant(m, ro);
                for (int k : {100, 1000}) {
                    const size_t idx =
                        std::min(sol.best_objective_history.size(), static_cast<size_t>(k));
                    const double bound =
                        L * std::sqrt(2.0 * std::log(static_cast<double>(m.arms())) / k);
                    if (grid - sol.best_objective_history[idx - 1] > bound + 1e-9) ++violations;
                }
                ++done;
            }
            c.require(violations == 0, "mirror-ascent suboptimality bound at k in {100, 1000} on "
                                       "20 tiny instances (" +
                                           std::to_string(violations) + " violations)");
        }

        { // determinism: repeated seeded experiments byte-identical
            ExperimentConfig cfg(symmetric_two_task_model());
            cfg.algo = "both";
            cfg.delta_g = cfg.delta_h = 0.2;
            cfg.runs = 5;
            cfg.seed = 4242;
            cfg.threads = 2;
            cfg.log_series = true;
            cfg.recompute_period = 12;
            const fs::path d1 = dir / "det_a", d2 = dir / "det_b";
            emit_outputs(run_experiment(cfg), cfg.instance, d1.string());
            emit_outputs(run_experiment(cfg), cfg.instance, d2.string());
            auto slurp = [](const fs::path& p) {
                std::ifstream in(p);
                std::stringstream ss;
                ss << in.rdbuf();
                return ss.str();
            };
            auto strip_wall = [](const std::string& s) {
                std::stringstream in(s), out;
                std::string line;
                bool first = true;
                while (std::getline(in, line)) {
                    if (!first) {
                        const auto pos = line.rfind(',');
                        if (pos != std::string::npos) line.resize(pos + 1);
                    }
                    first = false;
                    out << line << '\n';
                }
                return out.str();
            };
            const bool runs_same =
                strip_wall(slurp(d1 / "runs.csv")) == strip_wall(slurp(d2 / "runs.csv"));
            const bool rest_same = slurp(d1 / "alloc.csv") == slurp(d2 / "alloc.csv") &&
                                   slurp(d1 / "series.csv") == slurp(d2 / "series.csv") &&
                                   slurp(d1 / "summary.csv") == slurp(d2 / "summary.csv");
            c.require(runs_same && rest_same,
                      "repeated seeded experiments byte-identical (wall_ms excepted)");
        }
        break;
    }
    case 8: {
        const json stats = load_json(dir / "stats.json");
        const double truth = stats["true_rho_sigma"].get<double>();
        const CsvTable series = read_csv((dir / "d010_osrl/series.csv").string());
        const int cr = series.column("run_id"), cv = series.column("c_sigma_inv");
        std::map<std::int64_t, double> last; // series rows are time-ordered per run
        for (const auto& row : series.rows)
            last[parse_int(row[cr], "series")] = parse_double(row[cv], "series");
        c.require(last.size() >= 100, "final-series values available from " +
                                          std::to_string(last.size()) + " >= 100 runs");
        double mean = 0.0;
        for (const auto& [run, v] : last) mean += v;
        mean /= static_cast<double>(last.size());
        const double rel = std::abs(mean - truth) / truth;
        c.require(rel <= 0.12, "mean final C_sigma^-1(mu_hat) = " + fmt(mean) +
                                   " vs C_sigma^-1(mu) = " + fmt(truth) + ", relative error " +
                                   fmt(rel) + " <= 0.12");
        break;
    }
    default:
        std::cerr << "unknown criterion " << n << '\n';
        return 2;
    }

    std::cout << (c.pass ? "PASS" : "FAIL") << " criterion " << n << '\n' << c.detail.str();
    return c.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string mode, artifacts, cli;
    int criterion = 0;
    int divisor = 1;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "run" || args[i] == "check") mode = args[i];
        else if (args[i] == "--artifacts" && i + 1 < args.size()) artifacts = args[++i];
        else if (args[i] == "--cli" && i + 1 < args.size()) cli = args[++i];
        else if (args[i] == "--smoke") divisor = 50; // plumbing checks only
        else criterion = std::atoi(args[i].c_str());
    }
    if (mode.empty() || artifacts.empty()) {
        std::cerr << "usage: acceptance run --artifacts DIR [--cli PATH] [--smoke]\n"
                     "       acceptance check N --artifacts DIR\n";
        return 2;
    }
    try {
        if (mode == "run") return do_run(artifacts, cli, divisor);
        return check_criterion(criterion, artifacts);
    } catch (const std::exception& e) {
        std::cerr << "acceptance: " << e.what() << '\n';
        return 2;
    }
}
