// mtbai command line driver.
//
// Subcommands:
//   simulate   replicated runs of the two-phase algorithm and/or the
//              track-and-stop baseline, with CSV/JSON outputs
//   oracle     optimal allocation and characteristic times as JSON
//   summarize  aggregate statistics from a runs.csv
//   plot       SVG chart of a series.csv column
//
// Exit codes: 0 success, 2 config/usage error, 3 runtime/numerical error.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtbai/mtbai.hpp"

namespace {

int cmd_simulate(const std::string& config_path, std::optional<int> runs,
                 std::optional<std::uint64_t> seed, std::optional<std::string> algo,
                 std::optional<int> threads, bool series, const std::string& out_dir) {
    mtbai::ExperimentConfig cfg = mtbai::load_config(config_path);
    if (runs) cfg.runs = *runs;
    if (seed) cfg.seed = *seed;
    if (algo) cfg.algo = *algo;
    if (threads) cfg.threads = *threads;
    if (series) cfg.log_series = true;
    cfg.validate();

    const mtbai::ExperimentResult result = mtbai::run_experiment(cfg);
    const int failed = mtbai::emit_outputs(result, cfg.instance, out_dir);

    const mtbai::SummaryResult summary = mtbai::summarize(result.records);
    for (const auto& row : summary.rows)
        std::cout << row.algo << ' ' << row.phase << " delta_g=" << mtbai::fmt(row.delta_g)
                  << " n=" << row.n << " mean=" << mtbai::fmt(row.mean) << " +/- "
                  << mtbai::fmt(row.ci_half_width) << " [" << mtbai::fmt(row.min) << ", "
                  << mtbai::fmt(row.max) << "] std=" << mtbai::fmt(row.stddev) << '\n';
    for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';
    if (failed > 0) std::cerr << "warning: " << failed << " replicate(s) failed and were excluded\n";
    std::cout << "wrote " << out_dir << "/{runs,alloc,series,summary}.csv and summary.json\n";
    return 0;
}

int cmd_oracle(const std::string& config_path, std::optional<double> sigma) {
    mtbai::ExperimentConfig cfg = mtbai::load_config(config_path);
    if (sigma) cfg.solver.sigma = *sigma;
    cfg.solver.validate();

    const mtbai::OracleSolution sol = mtbai::solve_allocation(cfg.instance, cfg.solver);
    nlohmann::json q = nlohmann::json::array();
    for (int x = 0; x < cfg.instance.tasks(); ++x) {
        nlohmann::json qx = nlohmann::json::array();
        for (int g = 0; g < cfg.instance.representations(); ++g) {
            nlohmann::json qg = nlohmann::json::array();
            for (int h = 0; h < cfg.instance.predictors(); ++h)
                qg.push_back(sol.q_star.at(x, g, h));
            qx.push_back(std::move(qg));
        }
        q.push_back(std::move(qx));
    }
    nlohmann::json out = {
        {"q_star", std::move(q)},
        {"rho_star", sol.rho_star},
        {"c_sigma", sol.c_sigma},
        {"k_g", mtbai::char_time_G(cfg.instance, cfg.solver, cfg.delta_g)},
        {"k_h", mtbai::char_time_H(cfg.instance, cfg.solver, cfg.delta_h)},
        {"iterations", sol.iterations},
        {"converged", sol.converged},
    };
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_summarize(const std::string& in_path, const std::string& format) {
    const mtbai::SummaryResult summary = mtbai::summarize_csv(in_path);
    for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';
    if (format == "csv") {
        std::cout << "algo,phase,delta_g,delta_h,n,mean,ci_half_width,min,max,std\n";
        for (const auto& r : summary.rows)
            std::cout << r.algo << ',' << r.phase << ',' << mtbai::fmt(r.delta_g) << ','
                      << mtbai::fmt(r.delta_h) << ',' << r.n << ',' << mtbai::fmt(r.mean) << ','
                      << mtbai::fmt(r.ci_half_width) << ',' << mtbai::fmt(r.min) << ','
                      << mtbai::fmt(r.max) << ',' << mtbai::fmt(r.stddev) << '\n';
    } else if (format == "json") {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : summary.rows)
            rows.push_back({{"algo", r.algo},
                            {"phase", r.phase},
                            {"delta_g", r.delta_g},
                            {"delta_h", r.delta_h},
                            {"n", r.n},
                            {"mean", r.mean},
                            {"ci_half_width", r.ci_half_width},
                            {"min", r.min},
                            {"max", r.max},
                            {"std", r.stddev}});
        std::cout << rows.dump(2) << '\n';
    } else if (format == "markdown") {
        std::cout << "| algo | phase | delta_g | n | mean | ci 97.5% | min | max | std |\n"
                  << "|---|---|---|---|---|---|---|---|---|\n";
        for (const auto& r : summary.rows)
            std::cout << "| " << r.algo << " | " << r.phase << " | " << mtbai::fmt(r.delta_g)
                      << " | " << r.n << " | " << mtbai::fmt(r.mean) << " | +/-"
                      << mtbai::fmt(r.ci_half_width) << " | " << mtbai::fmt(r.min) << " | "
                      << mtbai::fmt(r.max) << " | " << mtbai::fmt(r.stddev) << " |\n";
    } else {
        throw mtbai::usage_error("format must be csv|json|markdown, got \"" + format + "\"");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Best-arm identification in multi-task bandits with a shared optimal "
                 "representation: two-phase identification, track-and-stop baseline, and the "
                 "instance-specific allocation oracle."};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run replicated experiments");
    std::string sim_config, sim_out;
    std::optional<int> sim_runs, sim_threads;
    std::optional<std::uint64_t> sim_seed;
    std::optional<std::string> sim_algo;
    bool sim_series = false;
    sim->add_option("--config", sim_config, "Experiment config JSON")->required();
    sim->add_option("--runs", sim_runs, "Replicate count override");
    sim->add_option("--seed", sim_seed, "Base seed override");
    sim->add_option("--algo", sim_algo, "osrl|tas|both")
        ->check(CLI::IsMember({"osrl", "tas", "both"}));
    sim->add_option("--threads", sim_threads, "Worker thread count");
    sim->add_flag("--series", sim_series, "Log oracle-recomputation series");
    sim->add_option("--out", sim_out, "Output directory")->required();

    // oracle
    auto* ora = app.add_subcommand("oracle", "Solve the optimal allocation");
    std::string ora_config;
    std::optional<double> ora_sigma;
    ora->add_option("--config", ora_config, "Experiment config JSON")->required();
    ora->add_option("--sigma", ora_sigma, "Regularizer override");

    // summarize
    auto* sum = app.add_subcommand("summarize", "Aggregate a runs.csv");
    std::string sum_in, sum_format = "csv";
    sum->add_option("--in", sum_in, "runs.csv path")->required();
    sum->add_option("--format", sum_format, "csv|json|markdown");

    // plot
    auto* plt = app.add_subcommand("plot", "Render a series column as SVG");
    std::string plt_in, plt_column, plt_out;
    int plt_window = 51;
    plt->add_option("--in", plt_in, "series.csv path")->required();
    plt->add_option("--column", plt_column, "Series column name")->required();
    plt->add_option("--out", plt_out, "Output SVG path")->required();
    plt->add_option("--window", plt_window, "Moving-average window");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(sim_config, sim_runs, sim_seed, sim_algo, sim_threads, sim_series,
                                sim_out);
        if (ora->parsed()) return cmd_oracle(ora_config, ora_sigma);
        if (sum->parsed()) return cmd_summarize(sum_in, sum_format);
        if (plt->parsed()) {
            mtbai::plot_series(plt_in, plt_column, plt_out, plt_window);
            std::cout << "wrote " << plt_out << '\n';
            return 0;
        }
    } catch (const mtbai::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const mtbai::usage_error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
