#include "tscp/experiment.hpp"

#include "tscp/csv.hpp"
#include "tscp/ridge.hpp"
#include "tscp/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

namespace tscp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string MethodSpec::label() const {
    std::string l = method_name(method.variant);
    if (adaptive) l += "+ACI";
    return l;
}

void ExperimentConfig::validate() const {
    if (schema_version != 1) {
        throw ConfigError("config: schema_version must be 1");
    }
    if (!(train_frac > 0 && calib_frac > 0 && test_frac > 0)) {
        throw ConfigError("config: split fractions must be positive");
    }
    if (train_frac + calib_frac + test_frac > 1.0 + 1e-9) {
        throw ConfigError("config: split fractions sum to more than 1");
    }
    if (alphas.empty()) throw ConfigError("config: alphas must be nonempty");
    for (double a : alphas) {
        if (!(a > 0.0 && a < 1.0)) {
            throw ConfigError("config: every alpha must lie in (0, 1)");
        }
    }
    if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
    if (ridge_lambda < 0.0) throw ConfigError("config: ridge_lambda must be >= 0");
    if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
    if (windows.empty()) throw ConfigError("config: windows must be nonempty");
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (windows[i] < 1 || (i > 0 && windows[i] <= windows[i - 1])) {
            throw ConfigError("config: windows must be ascending and >= 1");
        }
    }
    if (data.source == DataConfig::Source::Synthetic) {
        try {
            data.synthetic.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    } else if (data.csv_path.empty()) {
        throw ConfigError("config: csv data source requires a path");
    }
    try {
        train.validate();
        for (const MethodSpec& m : methods) {
            m.method.validate();
            if (m.adaptive && !(m.adaptive->gamma > 0.0)) {
                throw ConfigError("config: adaptive gamma must be > 0");
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

std::vector<MethodSpec> default_methods() {
    std::vector<MethodSpec> out(5);
    out[0].method.variant = MethodVariant::HopCPT;
    out[1].method.variant = MethodVariant::SplitCP;
    out[2].method.variant = MethodVariant::NexCP;
    out[3].method.variant = MethodVariant::EnbPI;
    out[4].method.variant = MethodVariant::KnnCP;
    return out;
}

std::uint64_t derive_seed(std::uint64_t run_seed, SeedUse use) {
    return rng::stream_seed(run_seed, static_cast<std::uint64_t>(use));
}

namespace {

[[noreturn]] void bad_key(const std::string& where, const std::string& key) {
    throw ConfigError("config: unknown key '" + key + "' in " + where);
}

double get_num(const json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError("config: '" + key + "' must be a number");
    return j.get<double>();
}

std::int64_t get_int(const json& j, const std::string& key) {
    if (!j.is_number_integer()) {
        throw ConfigError("config: '" + key + "' must be an integer");
    }
    return j.get<std::int64_t>();
}

bool get_bool(const json& j, const std::string& key) {
    if (!j.is_boolean()) throw ConfigError("config: '" + key + "' must be a bool");
    return j.get<bool>();
}

std::string get_str(const json& j, const std::string& key) {
    if (!j.is_string()) throw ConfigError("config: '" + key + "' must be a string");
    return j.get<std::string>();
}

DataConfig parse_data(const json& j) {
    DataConfig d;
    if (!j.is_object()) throw ConfigError("config: 'data' must be an object");
    const std::string source = j.contains("source") ? get_str(j["source"], "source")
                                                    : std::string("synthetic");
    if (source == "synthetic") {
        d.source = DataConfig::Source::Synthetic;
        for (const auto& [key, val] : j.items()) {
            if (key == "source") continue;
            if (key == "total_steps") d.synthetic.total_steps = get_int(val, key);
            else if (key == "x_low") d.synthetic.x_low = get_num(val, key);
            else if (key == "x_high") d.synthetic.x_high = get_num(val, key);
            else if (key == "regime_len_min") d.synthetic.regime_len_min = get_int(val, key);
            else if (key == "regime_len_max") d.synthetic.regime_len_max = get_int(val, key);
            else if (key == "base_level") d.synthetic.base_level = get_num(val, key);
            else if (key == "seed") d.synthetic.seed = static_cast<std::uint64_t>(get_int(val, key));
            else bad_key("data", key);
        }
    } else if (source == "csv") {
        d.source = DataConfig::Source::Csv;
        for (const auto& [key, val] : j.items()) {
            if (key == "source") continue;
            if (key == "path") d.csv_path = get_str(val, key);
            else bad_key("data", key);
        }
    } else {
        throw ConfigError("config: data source must be 'synthetic' or 'csv'");
    }
    return d;
}

HopQuantileMode parse_quantile_mode(const std::string& s) {
    if (s == "SampledMultiset") return HopQuantileMode::SampledMultiset;
    if (s == "WeightedECDF") return HopQuantileMode::WeightedECDF;
    throw ConfigError("config: unknown quantile_mode '" + s + "'");
}

AdaptiveMode parse_adaptive_mode(const std::string& s) {
    if (s == "Simple") return AdaptiveMode::Simple;
    if (s == "Momentum") return AdaptiveMode::Momentum;
    throw ConfigError("config: unknown adaptive mode '" + s + "'");
}

EncoderInputs parse_inputs(const std::string& s) {
    if (s == "PredictionOnly") return EncoderInputs::PredictionOnly;
    if (s == "FeaturesOnly") return EncoderInputs::FeaturesOnly;
    if (s == "PredictionAndFeatures") return EncoderInputs::PredictionAndFeatures;
    throw ConfigError("config: unknown encoder inputs '" + s + "'");
}

bool key_allowed(MethodVariant v, const std::string& key) {
    switch (v) {
        case MethodVariant::SplitCP: return false;
        case MethodVariant::NexCP: return key == "rho";
        case MethodVariant::EnbPI: return key == "window";
        case MethodVariant::KnnCP: return key == "top_share";
        case MethodVariant::HopCPT:
            return key == "quantile_mode" || key == "n_draws" || key == "memory";
    }
    return false;
}

MethodSpec parse_method(const json& j) {
    if (!j.is_object() || !j.contains("variant")) {
        throw ConfigError("config: each method needs a 'variant'");
    }
    MethodSpec spec;
    try {
        spec.method.variant = method_from_name(get_str(j["variant"], "variant"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    for (const auto& [key, val] : j.items()) {
        if (key == "variant") continue;
        if (key == "adaptive") {
            AdaptiveSpec a;
            for (const auto& [akey, aval] : val.items()) {
                if (akey == "gamma") a.gamma = get_num(aval, akey);
                else if (akey == "mode") a.mode = parse_adaptive_mode(get_str(aval, akey));
                else bad_key("method.adaptive", akey);
            }
            spec.adaptive = a;
            continue;
        }
        if (!key_allowed(spec.method.variant, key)) {
            throw ConfigError("config: key '" + key + "' does not apply to " +
                              method_name(spec.method.variant));
        }
        if (key == "rho") spec.method.nexcp_rho = get_num(val, key);
        else if (key == "window") spec.method.enbpi_window = get_int(val, key);
        else if (key == "top_share") spec.method.knn_top_share = get_num(val, key);
        else if (key == "quantile_mode")
            spec.method.hopcpt_quantile_mode = parse_quantile_mode(get_str(val, key));
        else if (key == "n_draws")
            spec.method.hopcpt_n_draws = static_cast<std::size_t>(get_int(val, key));
        else {  // memory
            const std::string s = get_str(val, key);
            if (s == "CalibPlusRevealed") spec.method.hopcpt_memory = HopMemory::CalibPlusRevealed;
            else if (s == "CalibOnly") spec.method.hopcpt_memory = HopMemory::CalibOnly;
            else throw ConfigError("config: unknown memory mode '" + s + "'");
        }
    }
    return spec;
}

TrainConfig parse_train(const json& j, TrainConfig base) {
    if (!j.is_object()) throw ConfigError("config: 'train' must be an object");
    for (const auto& [key, val] : j.items()) {
        if (key == "epochs") base.epochs = static_cast<int>(get_int(val, key));
        else if (key == "validate_every") base.validate_every = static_cast<int>(get_int(val, key));
        else if (key == "learning_rate") base.learning_rate = get_num(val, key);
        else if (key == "dropout") base.dropout = get_num(val, key);
        else if (key == "use_time_encoding") base.use_time_encoding = get_bool(val, key);
        else if (key == "inputs") base.inputs = parse_inputs(get_str(val, key));
        else if (key == "hidden_dim") base.hidden_dim = get_int(val, key);
        else if (key == "code_dim") base.code_dim = get_int(val, key);
        else if (key == "assoc_dim") base.assoc_dim = get_int(val, key);
        else if (key == "beta") base.beta = get_num(val, key);
        else if (key == "weight_decay") base.weight_decay = get_num(val, key);
        else if (key == "batch_size") base.batch_size = static_cast<int>(get_int(val, key));
        else if (key == "valid_alpha") base.valid_alpha = get_num(val, key);
        else bad_key("train", key);
    }
    return base;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");

    ExperimentConfig cfg;
    for (const auto& [key, val] : j.items()) {
        if (key == "schema_version") cfg.schema_version = static_cast<int>(get_int(val, key));
        else if (key == "data") cfg.data = parse_data(val);
        else if (key == "split") {
            for (const auto& [skey, sval] : val.items()) {
                if (skey == "train") cfg.train_frac = get_num(sval, skey);
                else if (skey == "calib") cfg.calib_frac = get_num(sval, skey);
                else if (skey == "test") cfg.test_frac = get_num(sval, skey);
                else bad_key("split", skey);
            }
        } else if (key == "alphas") {
            cfg.alphas.clear();
            for (const auto& a : val) cfg.alphas.push_back(get_num(a, "alphas[]"));
        } else if (key == "seeds") {
            cfg.seeds.clear();
            for (const auto& s : val) {
                cfg.seeds.push_back(static_cast<std::uint64_t>(get_int(s, "seeds[]")));
            }
        } else if (key == "ridge_lambda") {
            cfg.ridge_lambda = get_num(val, key);
        } else if (key == "methods") {
            cfg.methods.clear();
            for (const auto& m : val) cfg.methods.push_back(parse_method(m));
        } else if (key == "train") {
            cfg.train = parse_train(val, cfg.train);
        } else if (key == "out_dir") {
            cfg.out_dir = get_str(val, key);
        } else if (key == "jobs") {
            cfg.jobs = static_cast<int>(get_int(val, key));
        } else if (key == "write_intervals") {
            cfg.write_intervals = get_bool(val, key);
        } else if (key == "windows") {
            cfg.windows.clear();
            for (const auto& w : val) {
                cfg.windows.push_back(static_cast<std::size_t>(get_int(w, "windows[]")));
            }
        } else {
            bad_key("top level", key);
        }
    }
    cfg.validate();
    return cfg;
}

TimeSeriesDataset prepare_series(const ExperimentConfig& config,
                                 std::uint64_t run_seed, SplitSpec& split_out,
                                 std::vector<int>* regime_out) {
    TimeSeriesDataset raw;
    if (config.data.source == DataConfig::Source::Synthetic) {
        RegimeSeriesConfig gen = config.data.synthetic;
        gen.seed = rng::splitmix64(derive_seed(run_seed, SeedUse::Data) ^ gen.seed);
        RegimeSeries series = generate_regime_series(gen);
        raw = std::move(series.data);
        if (regime_out) *regime_out = std::move(series.regime);
    } else {
        CsvSeries series = read_series_csv(config.data.csv_path);
        raw = std::move(series.data);
        if (regime_out) *regime_out = std::move(series.regime);
    }
    split_out = split_from_fractions(raw.size(), config.train_frac,
                                     config.calib_frac, config.test_frac);
    const RidgeModel base =
        ridge_fit(raw.features.topRows(split_out.train_end),
                  raw.targets.head(split_out.train_end), config.ridge_lambda);
    return raw.with_predictions(ridge_predict(base, raw.features));
}

namespace {

struct MetricColumn {
    const char* name;
    double (*get)(const EvalReport&, std::size_t window);
    bool per_window;
};

double get_delta_cov(const EvalReport& r, std::size_t) { return r.delta_cov; }
double get_width(const EvalReport& r, std::size_t) { return r.mean_pi_width; }
double get_winkler(const EvalReport& r, std::size_t) { return r.mean_winkler; }
double get_winkler_norm(const EvalReport& r, std::size_t) {
    return r.mean_winkler_normalized;
}
double get_local(const EvalReport& r, std::size_t w) {
    const auto it = r.local_cov.find(w);
    return it == r.local_cov.end() ? std::numeric_limits<double>::quiet_NaN()
                                   : it->second;
}

const MetricColumn kMetricColumns[] = {
    {"delta_cov", get_delta_cov, false},
    {"mean_pi_width", get_width, false},
    {"mean_winkler", get_winkler, false},
    {"mean_winkler_normalized", get_winkler_norm, false},
    {"local_cov_k", get_local, true},
};

std::string sanitize_error(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

std::string unique_label(const std::vector<MethodSpec>& methods, std::size_t i) {
    std::string base = methods[i].label();
    std::size_t before = 0;
    for (std::size_t k = 0; k < i; ++k) {
        if (methods[k].label() == base) ++before;
    }
    if (before > 0) base += "#" + std::to_string(before + 1);
    return base;
}

// work done for one run seed: all methods at all alphas
std::vector<CellResult> run_one_seed(const ExperimentConfig& config,
                                     const std::vector<MethodSpec>& methods,
                                     const std::vector<std::string>& labels,
                                     std::uint64_t seed) {
    std::vector<CellResult> cells;
    auto fail_all = [&](const std::string& message) {
        for (std::size_t m = 0; m < methods.size(); ++m) {
            for (double alpha : config.alphas) {
                CellResult c;
                c.method = labels[m];
                c.alpha = alpha;
                c.seed = seed;
                c.ok = false;
                c.error = sanitize_error(message);
                cells.push_back(std::move(c));
            }
        }
        return cells;
    };

    TimeSeriesDataset data;
    SplitSpec split;
    try {
        data = prepare_series(config, seed, split);
    } catch (const std::exception& e) {
        return fail_all(std::string("data preparation failed: ") + e.what());
    }

    const bool wants_hopcpt =
        std::any_of(methods.begin(), methods.end(), [](const MethodSpec& m) {
            return m.method.variant == MethodVariant::HopCPT;
        });
    HopfieldModel model;
    bool model_ready = false;
    std::string train_error;
    if (wants_hopcpt) {
        try {
            TrainConfig tc = config.train;
            tc.seed = derive_seed(seed, SeedUse::Train);
            TrainResult result = train_hopfield(data, split, tc);
            model = std::move(result.model);
            model_ready = true;
            save_checkpoint(model, config.out_dir + "/checkpoints/hopcpt_seed" +
                                       std::to_string(seed) + ".json");
        } catch (const std::exception& e) {
            train_error = std::string("training failed: ") + e.what();
        }
    }

    const std::span<const double> test_targets(
        data.targets.data() + split.calib_end,
        static_cast<std::size_t>(split.n_test()));

    for (std::size_t m = 0; m < methods.size(); ++m) {
        for (double alpha : config.alphas) {
            CellResult cell;
            cell.method = labels[m];
            cell.alpha = alpha;
            cell.seed = seed;
            MethodConfig mc = methods[m].method;
            mc.alpha = alpha;
            try {
                if (mc.variant == MethodVariant::HopCPT && !model_ready) {
                    throw std::runtime_error(train_error);
                }
                std::optional<AdaptiveState> adaptive;
                if (methods[m].adaptive) {
                    AdaptiveState st;
                    st.alpha_target = alpha;
                    st.alpha_current = alpha;
                    st.err_ema = alpha;
                    st.gamma = methods[m].adaptive->gamma;
                    st.mode = methods[m].adaptive->mode;
                    adaptive = st;
                }
                const std::vector<PredictionInterval> intervals = run_method(
                    data, split, mc, model_ready ? &model : nullptr, adaptive,
                    derive_seed(seed, SeedUse::Sampling));
                cell.report = evaluate(intervals, test_targets, alpha,
                                       config.windows);
                cell.report.method = labels[m];
                cell.ok = true;
                if (config.write_intervals) {
                    std::string body = "t,y,y_hat,lower,upper,covered\n";
                    for (std::size_t i = 0; i < intervals.size(); ++i) {
                        const Eigen::Index t =
                            split.calib_end + static_cast<Eigen::Index>(i);
                        body += std::to_string(
                                    data.timestamps[static_cast<std::size_t>(t)]) +
                                ',' + format_double(data.targets[t]) + ',' +
                                format_double(data.predictions[t]) + ',' +
                                format_double(intervals[i].lower) + ',' +
                                format_double(intervals[i].upper) + ',' +
                                (intervals[i].covers(data.targets[t]) ? "1" : "0") +
                                '\n';
                    }
                    write_file_atomic(config.out_dir + "/intervals/" + labels[m] +
                                          "_a" + format_double(alpha) + "_s" +
                                          std::to_string(seed) + ".csv",
                                      body);
                }
            } catch (const std::exception& e) {
                cell.ok = false;
                cell.error = sanitize_error(e.what());
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

double sample_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

std::string results_by_seed_header(const std::vector<std::size_t>& windows) {
    std::string h =
        "method,alpha,seed,status,error,n_test,delta_cov,mean_pi_width,"
        "mean_winkler,mean_winkler_normalized";
    for (std::size_t w : windows) h += ",local_cov_k" + std::to_string(w);
    return h;
}

std::string results_by_seed_row(const CellResult& c,
                                const std::vector<std::size_t>& windows) {
    std::string row = c.method + ',' + format_double(c.alpha) + ',' +
                      std::to_string(c.seed) + ',' + (c.ok ? "ok" : "error") +
                      ',' + c.error;
    if (c.ok) {
        row += ',' + std::to_string(c.report.n_test);
        for (const MetricColumn& col : kMetricColumns) {
            if (!col.per_window) {
                row += ',' + format_double(col.get(c.report, 0));
            } else {
                for (std::size_t w : windows) {
                    row += ',' + format_double(col.get(c.report, w));
                }
            }
        }
    } else {
        row += ",,,,,";
        for (std::size_t i = 0; i < windows.size(); ++i) row += ',';
    }
    return row;
}

std::string summary_header(const std::vector<std::size_t>& windows) {
    std::string h = "method,alpha,n_seeds";
    for (const MetricColumn& col : kMetricColumns) {
        if (!col.per_window) {
            h += std::string(",") + col.name + "_mean," + col.name + "_std";
        } else {
            for (std::size_t w : windows) {
                const std::string base = col.name + std::to_string(w);
                h += "," + base + "_mean," + base + "_std";
            }
        }
    }
    return h;
}

RunOutcome run_experiment(const ExperimentConfig& config) {
    config.validate();
    const std::vector<MethodSpec> methods =
        config.methods.empty() ? default_methods() : config.methods;
    std::vector<std::string> labels(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
        labels[m] = unique_label(methods, m);
    }
    fs::create_directories(config.out_dir);

    // one task per seed; results land in per-seed slots so output order and
    // content never depend on scheduling
    std::vector<std::vector<CellResult>> by_seed(config.seeds.size());
    const int jobs = std::min<int>(config.jobs,
                                   static_cast<int>(config.seeds.size()));
    if (jobs <= 1) {
        for (std::size_t s = 0; s < config.seeds.size(); ++s) {
            by_seed[s] = run_one_seed(config, methods, labels, config.seeds[s]);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) {
            pool.emplace_back([&]() {
                while (true) {
                    const std::size_t s = next.fetch_add(1);
                    if (s >= config.seeds.size()) return;
                    by_seed[s] =
                        run_one_seed(config, methods, labels, config.seeds[s]);
                }
            });
        }
        for (std::thread& th : pool) th.join();
    }

    RunOutcome outcome;
    // canonical order: method, then alpha, then seed
    for (std::size_t m = 0; m < methods.size(); ++m) {
        for (std::size_t a = 0; a < config.alphas.size(); ++a) {
            for (std::size_t s = 0; s < config.seeds.size(); ++s) {
                const std::size_t idx = m * config.alphas.size() + a;
                outcome.cells.push_back(by_seed[s][idx]);
                if (!outcome.cells.back().ok) outcome.any_error = true;
            }
        }
    }

    std::string rows = results_by_seed_header(config.windows) + '\n';
    for (const CellResult& c : outcome.cells) {
        rows += results_by_seed_row(c, config.windows) + '\n';
    }
    outcome.results_path = config.out_dir + "/results_by_seed.csv";
    write_file_atomic(outcome.results_path, rows);

    std::string summary = summary_header(config.windows) + '\n';
    for (std::size_t m = 0; m < methods.size(); ++m) {
        for (double alpha : config.alphas) {
            std::vector<const EvalReport*> ok_reports;
            for (const CellResult& c : outcome.cells) {
                if (c.method == labels[m] && c.alpha == alpha && c.ok) {
                    ok_reports.push_back(&c.report);
                }
            }
            summary += labels[m] + ',' + format_double(alpha) + ',' +
                       std::to_string(ok_reports.size());
            for (const MetricColumn& col : kMetricColumns) {
                const auto append_stats = [&](std::size_t w) {
                    std::vector<double> xs;
                    xs.reserve(ok_reports.size());
                    for (const EvalReport* r : ok_reports) {
                        xs.push_back(col.get(*r, w));
                    }
                    if (xs.empty()) {
                        summary += ",,";
                        return;
                    }
                    double mean = 0.0;
                    for (double x : xs) mean += x;
                    mean /= static_cast<double>(xs.size());
                    summary += ',' + format_double(mean) + ',' +
                               format_double(sample_std(xs, mean));
                };
                if (!col.per_window) {
                    append_stats(0);
                } else {
                    for (std::size_t w : config.windows) append_stats(w);
                }
            }
            summary += '\n';
        }
    }
    outcome.summary_path = config.out_dir + "/summary.csv";
    write_file_atomic(outcome.summary_path, summary);
    return outcome;
}

namespace {

struct GridPoint {
    MethodSpec spec;
    TrainConfig train;  // only meaningful for HopCPT points
    std::string params;
};

std::vector<GridPoint> expand_grid(const MethodSpec& spec,
                                   const TrainConfig& base_train) {
    std::vector<GridPoint> points;
    switch (spec.method.variant) {
        case MethodVariant::SplitCP: {
            GridPoint p{spec, base_train, "-"};
            points.push_back(std::move(p));
            break;
        }
        case MethodVariant::NexCP: {
            for (double rho : {0.999, 0.995, 0.993, 0.99, 0.98, 0.95, 0.90}) {
                GridPoint p{spec, base_train, "rho=" + format_double(rho)};
                p.spec.method.nexcp_rho = rho;
                points.push_back(std::move(p));
            }
            break;
        }
        case MethodVariant::EnbPI: {
            for (std::int64_t w : {200, 150, 125, 100, 75, 50, 25, 10}) {
                GridPoint p{spec, base_train, "window=" + std::to_string(w)};
                p.spec.method.enbpi_window = w;
                points.push_back(std::move(p));
            }
            break;
        }
        case MethodVariant::KnnCP: {
            for (double s : {0.025, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35}) {
                GridPoint p{spec, base_train, "share=" + format_double(s)};
                p.spec.method.knn_top_share = s;
                points.push_back(std::move(p));
            }
            break;
        }
        case MethodVariant::HopCPT: {
            for (double lr : {0.01, 0.001}) {
                for (double drop : {0.0, 0.25, 0.5}) {
                    for (bool time : {true, false}) {
                        GridPoint p{spec, base_train,
                                    "lr=" + format_double(lr) +
                                        " dropout=" + format_double(drop) +
                                        " time=" + (time ? "yes" : "no")};
                        p.train.learning_rate = lr;
                        p.train.dropout = drop;
                        p.train.use_time_encoding = time;
                        points.push_back(std::move(p));
                    }
                }
            }
            break;
        }
    }
    if (spec.adaptive) {
        std::vector<GridPoint> crossed;
        for (const GridPoint& p : points) {
            for (AdaptiveMode mode : {AdaptiveMode::Simple, AdaptiveMode::Momentum}) {
                for (double gamma : {0.002, 0.005, 0.01, 0.02}) {
                    GridPoint q = p;
                    q.spec.adaptive->mode = mode;
                    q.spec.adaptive->gamma = gamma;
                    if (q.params == "-") q.params.clear();
                    if (!q.params.empty()) q.params += ' ';
                    q.params += std::string("mode=") +
                                (mode == AdaptiveMode::Simple ? "Simple" : "Momentum") +
                                " gamma=" + format_double(gamma);
                    crossed.push_back(std::move(q));
                }
            }
        }
        points = std::move(crossed);
    }
    return points;
}

// Validation for one non-HopCPT grid point: replay the method over the back
// part of the calibration segment, treating the front part as its history.
ValidationPoint validate_grid_point(const TimeSeriesDataset& data,
                                    const SplitSpec& split, const GridPoint& point,
                                    double valid_alpha, std::uint64_t seed) {
    Eigen::Index val_begin;
    if (point.spec.method.variant == MethodVariant::EnbPI) {
        // the window is all the history EnbPI needs, so validate on the rest
        val_begin = split.train_end +
                    static_cast<Eigen::Index>(point.spec.method.enbpi_window);
    } else {
        val_begin = split.train_end + split.n_calib() / 2;
    }
    if (val_begin >= split.calib_end - 1) {
        throw std::runtime_error("grid: calibration segment too short to validate");
    }
    SplitSpec val_split;
    val_split.train_end = split.train_end;
    val_split.calib_end = val_begin;
    val_split.test_end = split.calib_end;

    MethodConfig mc = point.spec.method;
    mc.alpha = valid_alpha;
    std::optional<AdaptiveState> adaptive;
    if (point.spec.adaptive) {
        AdaptiveState st;
        st.alpha_target = valid_alpha;
        st.alpha_current = valid_alpha;
        st.err_ema = valid_alpha;
        st.gamma = point.spec.adaptive->gamma;
        st.mode = point.spec.adaptive->mode;
        adaptive = st;
    }
    const std::vector<PredictionInterval> intervals =
        run_method(data, val_split, mc, nullptr, adaptive,
                   derive_seed(seed, SeedUse::Sampling));
    const std::span<const double> targets(
        data.targets.data() + val_split.calib_end,
        static_cast<std::size_t>(val_split.n_test()));
    ValidationPoint vp;
    vp.delta_cov = delta_cov(intervals, targets, valid_alpha);
    double width = 0.0;
    for (const PredictionInterval& pi : intervals) width += pi.width();
    vp.pi_width = width / static_cast<double>(intervals.size());
    return vp;
}

}  // namespace

GridOutcome run_grid(const ExperimentConfig& config) {
    config.validate();
    const std::vector<MethodSpec> methods =
        config.methods.empty() ? default_methods() : config.methods;
    fs::create_directories(config.out_dir);

    const std::uint64_t seed = config.seeds.front();
    TimeSeriesDataset data;
    SplitSpec split;
    data = prepare_series(config, seed, split);

    GridOutcome outcome;
    std::vector<MethodSpec> winners;
    TrainConfig winning_train = config.train;

    for (std::size_t m = 0; m < methods.size(); ++m) {
        const std::vector<GridPoint> points = expand_grid(methods[m], config.train);
        std::vector<ValidationPoint> usable;
        std::vector<std::size_t> usable_idx;
        const std::size_t first_cell = outcome.cells.size();
        for (std::size_t p = 0; p < points.size(); ++p) {
            GridCell cell;
            cell.method = unique_label(methods, m);
            cell.params = points[p].params;
            try {
                if (points[p].spec.method.variant == MethodVariant::HopCPT) {
                    TrainConfig tc = points[p].train;
                    tc.seed = derive_seed(seed, SeedUse::Train);
                    const TrainResult r = train_hopfield(data, split, tc);
                    cell.validation = r.history[r.selected];
                } else {
                    cell.validation = validate_grid_point(
                        data, split, points[p], config.train.valid_alpha, seed);
                }
                usable.push_back(cell.validation);
                usable_idx.push_back(p);
            } catch (const std::exception&) {
                cell.validation.delta_cov = std::numeric_limits<double>::quiet_NaN();
                cell.validation.pi_width = std::numeric_limits<double>::quiet_NaN();
            }
            outcome.cells.push_back(std::move(cell));
        }
        if (usable.empty()) continue;
        const std::size_t chosen = usable_idx[select_model(usable)];
        outcome.cells[first_cell + chosen].selected = true;
        winners.push_back(points[chosen].spec);
        if (points[chosen].spec.method.variant == MethodVariant::HopCPT) {
            winning_train = points[chosen].train;
        }
    }

    std::string table = "method,params,delta_cov,pi_width,selected\n";
    for (const GridCell& c : outcome.cells) {
        table += c.method + ',' + c.params + ',' +
                 format_double(c.validation.delta_cov) + ',' +
                 format_double(c.validation.pi_width) + ',' +
                 (c.selected ? "1" : "0") + '\n';
    }
    outcome.table_path = config.out_dir + "/grid_table.csv";
    write_file_atomic(outcome.table_path, table);

    ExperimentConfig final_cfg = config;
    final_cfg.methods = winners;
    final_cfg.train = winning_train;
    const RunOutcome final_run = run_experiment(final_cfg);
    outcome.final_cells = final_run.cells;
    outcome.final_path = final_run.summary_path;
    return outcome;
}

EvalReport eval_intervals_file(const std::string& path, double alpha,
                               const std::vector<std::size_t>& windows,
                               bool rolling) {
    const CsvTable table = read_csv_table(path);
    const std::size_t y_col = table.column("y");
    const std::size_t lo_col = table.column("lower");
    const std::size_t hi_col = table.column("upper");
    std::vector<PredictionInterval> intervals;
    std::vector<double> targets;
    auto to_double = [&](const std::string& cell) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
            throw std::runtime_error("eval: cannot parse '" + cell + "' as number");
        }
        return v;
    };
    for (const auto& row : table.rows) {
        PredictionInterval pi;
        pi.lower = to_double(row[lo_col]);
        pi.upper = to_double(row[hi_col]);
        pi.alpha = alpha;
        intervals.push_back(pi);
        targets.push_back(to_double(row[y_col]));
    }
    EvalReport report = evaluate(intervals, targets, alpha, windows, rolling);
    report.method = fs::path(path).stem().string();
    return report;
}

}  // namespace tscp
