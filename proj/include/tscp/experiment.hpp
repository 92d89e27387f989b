#pragma once

#include "tscp/hopfield.hpp"
#include "tscp/methods.hpp"
#include "tscp/metrics.hpp"
#include "tscp/synthetic.hpp"
#include "tscp/types.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Experiment orchestration shared by the CLI and the test suite: config
// parsing, the multi-seed run driver, hyperparameter grid search with
// validation-based selection, and report writing.  All result files are
// written atomically and deterministically; two runs with identical config
// and seeds produce byte-identical outputs.

namespace tscp {

// Raised for malformed configs/flags; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataConfig {
    enum class Source { Synthetic, Csv };
    Source source = Source::Synthetic;
    RegimeSeriesConfig synthetic;  // seed field is mixed with the run seed
    std::string csv_path;
};

struct AdaptiveSpec {
    double gamma = 0.005;
    AdaptiveMode mode = AdaptiveMode::Simple;
};

// One method column in the experiment: a concrete MethodConfig plus an
// optional adaptive-alpha wrapper.
struct MethodSpec {
    MethodConfig method;
    std::optional<AdaptiveSpec> adaptive;

    std::string label() const;  // e.g. "HopCPT", "SplitCP+ACI"
};

struct ExperimentConfig {
    int schema_version = 1;
    DataConfig data;
    double train_frac = 1.0 / 3.0;
    double calib_frac = 1.0 / 3.0;
    double test_frac = 1.0 / 3.0;
    std::vector<double> alphas = {0.05, 0.10, 0.15};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    double ridge_lambda = 1.0;
    std::vector<MethodSpec> methods;  // empty = all five defaults
    TrainConfig train;
    std::string out_dir = "out";
    int jobs = 1;
    bool write_intervals = true;
    std::vector<std::size_t> windows = {10, 20, 50};

    void validate() const;
};

// Parses the JSON config file.  schema_version must be 1; unknown keys are
// rejected.  Throws ConfigError with a line/key diagnostic on any problem.
ExperimentConfig load_config(const std::string& path);

// The five default method columns (HopCPT, SplitCP, NexCP, EnbPI, KnnCP).
std::vector<MethodSpec> default_methods();

// Substream tags for the documented master-seed splitting scheme.
enum class SeedUse : std::uint64_t { Data = 1, Train = 2, Sampling = 3 };
std::uint64_t derive_seed(std::uint64_t run_seed, SeedUse use);

// One (method, alpha, seed) evaluation cell.  Failed cells carry the error
// message and empty metrics instead of aborting the run.
struct CellResult {
    std::string method;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    EvalReport report;
};

struct RunOutcome {
    std::vector<CellResult> cells;
    bool any_error = false;
    std::string results_path;  // per-seed rows
    std::string summary_path;  // mean +- std over seeds
};

// Loads or generates the data per seed, fits the ridge base model on the
// train segment, trains the retrieval model once per seed when HopCPT is
// requested, runs every method at every alpha, and writes results_by_seed.csv,
// summary.csv, per-step interval files, and model checkpoints under out_dir.
RunOutcome run_experiment(const ExperimentConfig& config);

// One evaluated grid point.  Validation metrics come from the calibration
// split (second half as validation stream; for EnbPI the full calibration
// minus the first window-length steps).
struct GridCell {
    std::string method;
    std::string params;  // human-readable "key=value key=value"
    ValidationPoint validation;
    bool selected = false;
};

struct GridOutcome {
    std::vector<GridCell> cells;
    // winner per method label, re-run on the test segment with the full
    // calibration set, one row per (alpha, seed)
    std::vector<CellResult> final_cells;
    std::string table_path;
    std::string final_path;
};

// Grid search on seeds[0] with select_model over validation metrics, then a
// full multi-seed evaluation of each winner.
GridOutcome run_grid(const ExperimentConfig& config);

// Re-scores an intervals CSV (columns t,y,y_hat,lower,upper,...) at the
// given alpha.
EvalReport eval_intervals_file(const std::string& path, double alpha,
                               const std::vector<std::size_t>& windows,
                               bool rolling = false);

// Shared helpers for drivers and tests.
TimeSeriesDataset prepare_series(const ExperimentConfig& config,
                                 std::uint64_t run_seed, SplitSpec& split_out,
                                 std::vector<int>* regime_out = nullptr);

std::string results_by_seed_header(const std::vector<std::size_t>& windows);
std::string results_by_seed_row(const CellResult& cell,
                                const std::vector<std::size_t>& windows);
std::string summary_header(const std::vector<std::size_t>& windows);

}  // namespace tscp
