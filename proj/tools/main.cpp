// tscp command line: generate data, run experiments, sweep grids, score files.
#include "tscp/csv.hpp"
#include "tscp/experiment.hpp"
#include "tscp/metrics.hpp"
#include "tscp/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct CommonOverrides {
    std::string config_path;
    std::vector<std::uint64_t> seeds;
    std::string out_dir;
    std::vector<double> alphas;
    std::vector<std::string> method_names;
    int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOverrides& ov) {
    cmd->add_option("--config", ov.config_path, "JSON experiment config");
    cmd->add_option("--seed", ov.seeds, "run seeds (overrides config)");
    cmd->add_option("--out", ov.out_dir, "output directory (overrides config)");
    cmd->add_option("--alpha", ov.alphas, "miscoverage levels (overrides config)");
    cmd->add_option("--method", ov.method_names,
                    "methods to run: HopCPT SplitCP NexCP EnbPI KnnCP "
                    "(overrides config)");
    cmd->add_option("--jobs", ov.jobs, "worker threads over seeds");
}

tscp::ExperimentConfig build_config(const CommonOverrides& ov) {
    tscp::ExperimentConfig cfg;
    if (!ov.config_path.empty()) cfg = tscp::load_config(ov.config_path);
    if (!ov.seeds.empty()) cfg.seeds = ov.seeds;
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (!ov.alphas.empty()) cfg.alphas = ov.alphas;
    if (!ov.method_names.empty()) {
        cfg.methods.clear();
        for (const std::string& name : ov.method_names) {
            tscp::MethodSpec spec;
            spec.method.variant = tscp::method_from_name(name);
            cfg.methods.push_back(spec);
        }
    }
    if (ov.jobs > 0) cfg.jobs = ov.jobs;
    cfg.validate();
    return cfg;
}

void print_reports(const std::vector<tscp::CellResult>& cells,
                   const std::vector<std::size_t>& windows) {
    std::cout << tscp::results_by_seed_header(windows) << '\n';
    for (const tscp::CellResult& c : cells) {
        std::cout << tscp::results_by_seed_row(c, windows) << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conformal prediction intervals for time series"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "write a synthetic series CSV");
    tscp::RegimeSeriesConfig gen_cfg;
    std::string gen_out = "series.csv";
    gen->add_option("--steps", gen_cfg.total_steps, "series length");
    gen->add_option("--seed", gen_cfg.seed, "generator seed");
    gen->add_option("--x-low", gen_cfg.x_low, "low-regime feature value");
    gen->add_option("--x-high", gen_cfg.x_high, "high-regime feature value");
    gen->add_option("--out", gen_out, "output CSV path");

    // run
    auto* run = app.add_subcommand("run", "run methods across seeds and alphas");
    CommonOverrides run_ov;
    add_common(run, run_ov);

    // grid
    auto* grid = app.add_subcommand(
        "grid", "sweep method hyperparameters, then rerun the winners");
    CommonOverrides grid_ov;
    add_common(grid, grid_ov);

    // eval
    auto* eval = app.add_subcommand("eval", "score an intervals CSV");
    std::string eval_file;
    double eval_alpha = 0.1;
    std::vector<std::size_t> eval_windows(tscp::kDefaultWindows.begin(),
                                          tscp::kDefaultWindows.end());
    bool eval_rolling = false;
    eval->add_option("--file", eval_file, "intervals CSV (t,y,...,lower,upper)")
        ->required();
    eval->add_option("--alpha", eval_alpha, "miscoverage level");
    eval->add_option("--window", eval_windows, "local coverage window sizes");
    eval->add_flag("--rolling", eval_rolling, "rolling windows instead of disjoint");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const tscp::RegimeSeries series = tscp::generate_regime_series(gen_cfg);
            tscp::write_series_csv(gen_out, series.data, &series.regime);
            std::cout << "wrote " << gen_out << " (" << series.data.size()
                      << " steps)\n";
            return 0;
        }
        if (run->parsed()) {
            const tscp::ExperimentConfig cfg = build_config(run_ov);
            const tscp::RunOutcome outcome = tscp::run_experiment(cfg);
            print_reports(outcome.cells, cfg.windows);
            std::cout << "per-seed results: " << outcome.results_path << '\n'
                      << "summary: " << outcome.summary_path << '\n';
            return outcome.any_error ? 1 : 0;
        }
        if (grid->parsed()) {
            const tscp::ExperimentConfig cfg = build_config(grid_ov);
            const tscp::GridOutcome outcome = tscp::run_grid(cfg);
            std::size_t selected = 0;
            for (const tscp::GridCell& c : outcome.cells) {
                if (c.selected) {
                    std::cout << "selected " << c.method << ": " << c.params
                              << '\n';
                    ++selected;
                }
            }
            print_reports(outcome.final_cells, cfg.windows);
            std::cout << "grid table: " << outcome.table_path << '\n'
                      << "final summary: " << outcome.final_path << '\n';
            bool any_error = false;
            for (const tscp::CellResult& c : outcome.final_cells) {
                if (!c.ok) any_error = true;
            }
            return (any_error || selected == 0) ? 1 : 0;
        }
        if (eval->parsed()) {
            const tscp::EvalReport report = tscp::eval_intervals_file(
                eval_file, eval_alpha, eval_windows, eval_rolling);
            std::cout << tscp::eval_report_header(eval_windows) << '\n'
                      << tscp::eval_report_row(report) << '\n';
            return 0;
        }
    } catch (const tscp::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
