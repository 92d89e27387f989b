#include "tscp/methods.hpp"

#include "tscp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tscp {

void MethodConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("method: alpha must lie in (0, 1)");
    }
    if (!(nexcp_rho > 0.0 && nexcp_rho <= 1.0)) {
        throw std::invalid_argument("method: nexcp_rho must lie in (0, 1]");
    }
    if (enbpi_window < 1) {
        throw std::invalid_argument("method: enbpi_window must be >= 1");
    }
    if (!(knn_top_share > 0.0 && knn_top_share <= 1.0)) {
        throw std::invalid_argument("method: knn_top_share must lie in (0, 1]");
    }
}

std::string method_name(MethodVariant v) {
    switch (v) {
        case MethodVariant::HopCPT: return "HopCPT";
        case MethodVariant::SplitCP: return "SplitCP";
        case MethodVariant::NexCP: return "NexCP";
        case MethodVariant::EnbPI: return "EnbPI";
        case MethodVariant::KnnCP: return "KnnCP";
    }
    throw std::invalid_argument("method: unknown variant");
}

MethodVariant method_from_name(const std::string& name) {
    if (name == "HopCPT") return MethodVariant::HopCPT;
    if (name == "SplitCP") return MethodVariant::SplitCP;
    if (name == "NexCP") return MethodVariant::NexCP;
    if (name == "EnbPI") return MethodVariant::EnbPI;
    if (name == "KnnCP") return MethodVariant::KnnCP;
    throw std::invalid_argument("method: unknown variant name '" + name + "'");
}

void AdaptiveState::validate() const {
    if (!(alpha_target > 0.0 && alpha_target < 1.0)) {
        throw std::invalid_argument("adaptive: alpha_target must lie in (0, 1)");
    }
    if (!(alpha_current > 0.0 && alpha_current < 1.0)) {
        throw std::invalid_argument("adaptive: alpha_current must lie in (0, 1)");
    }
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("adaptive: gamma must be > 0");
    }
    if (!(err_ema >= 0.0 && err_ema <= 1.0)) {
        throw std::invalid_argument("adaptive: err_ema must lie in [0, 1]");
    }
}

void adaptive_update(AdaptiveState& state, bool covered) {
    const double err = covered ? 0.0 : 1.0;
    double drive = err;
    if (state.mode == AdaptiveMode::Momentum) {
        constexpr double decay = 0.95;
        state.err_ema = decay * state.err_ema + (1.0 - decay) * err;
        drive = state.err_ema;
    }
    state.alpha_current += state.gamma * (state.alpha_target - drive);
    state.alpha_current = std::clamp(state.alpha_current, 0.001, 0.999);
}

PredictionInterval split_cp_interval(std::span<const double> calib_abs_errors,
                                     double prediction, double alpha) {
    const ScoreQuantile q = conformal_quantile(calib_abs_errors, alpha);
    if (q.infinite) return full_line_interval(alpha);
    PredictionInterval pi;
    pi.lower = prediction - q.value;
    pi.upper = prediction + q.value;
    pi.alpha = alpha;
    pi.validate();
    return pi;
}

WeightVector nexcp_weights(std::size_t n_errors, double rho) {
    if (n_errors < 1) {
        throw std::invalid_argument("nexcp_weights: need at least one error");
    }
    if (!(rho > 0.0 && rho <= 1.0)) {
        throw std::invalid_argument("nexcp_weights: rho must lie in (0, 1]");
    }
    std::vector<double> omega(n_errors);
    double w = rho;  // most recent error gets rho^1
    for (std::size_t i = n_errors; i-- > 0;) {
        omega[i] = w;
        w *= rho;
    }
    const double denom =
        std::accumulate(omega.begin(), omega.end(), 0.0) + 1.0;
    WeightVector out;
    out.w.resize(n_errors + 1);
    for (std::size_t i = 0; i < n_errors; ++i) out.w[i] = omega[i] / denom;
    out.w[n_errors] = 1.0 / denom;  // mass at +infinity for the test point
    return out;
}

PredictionInterval nexcp_interval(std::span<const double> errors,
                                  double prediction, double alpha, double rho) {
    if (errors.empty()) {
        throw std::invalid_argument("nexcp_interval: empty error history");
    }
    const WeightVector w = nexcp_weights(errors.size(), rho);
    const ScoreQuantile lo =
        weighted_quantile_with_tail(errors, w, QuantileLevel(alpha / 2.0));
    const ScoreQuantile hi =
        weighted_quantile_with_tail(errors, w, QuantileLevel(1.0 - alpha / 2.0));
    if (lo.infinite || hi.infinite) return full_line_interval(alpha);
    PredictionInterval pi;
    pi.lower = prediction + lo.value;
    pi.upper = prediction + hi.value;
    pi.alpha = alpha;
    pi.validate();
    return pi;
}

PredictionInterval enbpi_interval(std::span<const double> window_errors,
                                  double prediction, double alpha) {
    if (window_errors.empty()) {
        throw std::invalid_argument("enbpi_interval: empty window");
    }
    PredictionInterval pi;
    pi.lower =
        prediction + empirical_quantile(window_errors, QuantileLevel(alpha / 2.0));
    pi.upper = prediction +
               empirical_quantile(window_errors, QuantileLevel(1.0 - alpha / 2.0));
    pi.alpha = alpha;
    pi.validate();
    return pi;
}

PredictionInterval knn_cp_interval(const Eigen::MatrixXd& history_features,
                                   std::span<const double> history_errors,
                                   const Eigen::RowVectorXd& query_features,
                                   double k_share, double prediction,
                                   double alpha) {
    const Eigen::Index n = history_features.rows();
    if (n < 1 || static_cast<std::size_t>(n) != history_errors.size()) {
        throw std::invalid_argument("knn_cp_interval: history shape mismatch");
    }
    if (history_features.cols() != query_features.size()) {
        throw std::invalid_argument("knn_cp_interval: feature width mismatch");
    }
    if (!(k_share > 0.0 && k_share <= 1.0)) {
        throw std::invalid_argument("knn_cp_interval: k_share must lie in (0, 1]");
    }

    // z-score standardization from the history, applied to both sides
    const Eigen::Index m = history_features.cols();
    Eigen::VectorXd mean(m), sd(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        mean[j] = history_features.col(j).mean();
        const double var =
            (history_features.col(j).array() - mean[j]).square().mean();
        const double s = std::sqrt(var);
        sd[j] = s < 1e-12 ? 1.0 : s;
    }
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        double d2 = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double diff =
                (history_features(i, j) - query_features[j]) / sd[j];
            d2 += diff * diff;
        }
        dist[static_cast<std::size_t>(i)] = d2;
    }
    const std::size_t k = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::ceil(k_share * static_cast<double>(n) - kIndexSlack)));
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    // stable sort so distance ties resolve by history position
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    std::vector<double> pool(k);
    for (std::size_t i = 0; i < k; ++i) pool[i] = history_errors[order[i]];

    PredictionInterval pi;
    pi.lower = prediction + empirical_quantile(pool, QuantileLevel(alpha / 2.0));
    pi.upper =
        prediction + empirical_quantile(pool, QuantileLevel(1.0 - alpha / 2.0));
    pi.alpha = alpha;
    pi.validate();
    return pi;
}

PredictionInterval interval_from_weights(std::span<const double> errors,
                                         const WeightVector& weights,
                                         double prediction, double alpha,
                                         HopQuantileMode mode,
                                         std::size_t n_draws, std::uint64_t seed) {
    if (errors.empty()) {
        throw std::invalid_argument("interval_from_weights: empty error history");
    }
    if (weights.size() != errors.size()) {
        throw std::invalid_argument("interval_from_weights: weights length mismatch");
    }
    const QuantileLevel lo(alpha / 2.0);
    const QuantileLevel hi(1.0 - alpha / 2.0);
    PredictionInterval pi;
    if (mode == HopQuantileMode::WeightedECDF) {
        pi.lower = prediction + weighted_quantile_ecdf(errors, weights, lo);
        pi.upper = prediction + weighted_quantile_ecdf(errors, weights, hi);
    } else {
        const std::size_t n =
            n_draws > 0 ? n_draws : std::max<std::size_t>(1000, errors.size());
        const std::vector<double> draws = weighted_sample(errors, weights, n, seed);
        pi.lower = prediction + empirical_quantile(draws, lo);
        pi.upper = prediction + empirical_quantile(draws, hi);
    }
    pi.alpha = alpha;
    pi.validate();
    return pi;
}

HopRetrievalSession::HopRetrievalSession(const HopfieldModel& model,
                                         const TimeSeriesDataset& data)
    : data_(data), beta_(model.beta) {
    model.validate();
    data.validate();
    if (!data.has_predictions()) {
        throw std::invalid_argument("retrieval session: predictions required");
    }
    const Eigen::MatrixXd z = assemble_encoder_inputs(data, model.inputs);
    const std::int64_t total =
        std::max<std::int64_t>(1, data.timestamps.back() + 1);
    const Eigen::MatrixXd codes =
        encode(model, z, data.timestamps, total, false, 0);
    q_proj_ = codes * model.wq.transpose();
    k_proj_ = codes * model.wk.transpose();
}

WeightVector HopRetrievalSession::weights(Eigen::Index query, Eigen::Index begin,
                                          Eigen::Index end) const {
    if (!(0 <= begin && begin < end && end <= q_proj_.rows())) {
        throw std::invalid_argument("retrieval session: bad history range");
    }
    if (begin <= query && query < end) {
        throw std::invalid_argument(
            "retrieval session: query must lie outside its own memory");
    }
    Eigen::VectorXd logits =
        beta_ * (k_proj_.middleRows(begin, end - begin) *
                 q_proj_.row(query).transpose());
    const double mx = logits.maxCoeff();
    Eigen::ArrayXd e = (logits.array() - mx).exp();
    e /= e.sum();
    WeightVector w;
    w.w.assign(e.data(), e.data() + e.size());
    return w;
}

PredictionInterval HopRetrievalSession::interval(Eigen::Index query,
                                                 Eigen::Index begin,
                                                 Eigen::Index end, double alpha,
                                                 const MethodConfig& cfg,
                                                 std::uint64_t seed) const {
    const WeightVector w = weights(query, begin, end);
    const std::span<const double> err(data_.errors.data() + begin,
                                      static_cast<std::size_t>(end - begin));
    return interval_from_weights(err, w, data_.predictions[query], alpha,
                                 cfg.hopcpt_quantile_mode, cfg.hopcpt_n_draws,
                                 seed);
}

std::vector<PredictionInterval> run_method(const TimeSeriesDataset& data,
                                           const SplitSpec& split,
                                           const MethodConfig& config,
                                           const HopfieldModel* model,
                                           std::optional<AdaptiveState> adaptive,
                                           std::uint64_t seed) {
    data.validate();
    split.validate(data.size());
    config.validate();
    if (!data.has_predictions()) {
        throw std::invalid_argument("run_method: predictions required");
    }
    if (adaptive) adaptive->validate();

    const Eigen::Index calib_begin = split.train_end;
    const Eigen::Index calib_end = split.calib_end;
    const Eigen::Index test_end = split.test_end;

    std::vector<double> calib_abs;
    if (config.variant == MethodVariant::SplitCP) {
        calib_abs.resize(static_cast<std::size_t>(calib_end - calib_begin));
        for (Eigen::Index i = calib_begin; i < calib_end; ++i) {
            calib_abs[static_cast<std::size_t>(i - calib_begin)] =
                std::abs(data.errors[i]);
        }
    }
    std::optional<HopRetrievalSession> session;
    if (config.variant == MethodVariant::HopCPT) {
        if (model == nullptr) {
            throw std::invalid_argument("run_method: HopCPT requires a trained model");
        }
        session.emplace(*model, data);
    }

    auto revealed = [&](Eigen::Index begin, Eigen::Index end) {
        return std::span<const double>(data.errors.data() + begin,
                                       static_cast<std::size_t>(end - begin));
    };

    std::vector<PredictionInterval> out;
    out.reserve(static_cast<std::size_t>(test_end - calib_end));
    for (Eigen::Index t = calib_end; t < test_end; ++t) {
        const double alpha = adaptive ? adaptive->alpha_current : config.alpha;
        const double pred = data.predictions[t];
        PredictionInterval pi;
        switch (config.variant) {
            case MethodVariant::SplitCP:
                pi = split_cp_interval(calib_abs, pred, alpha);
                break;
            case MethodVariant::NexCP:
                pi = nexcp_interval(revealed(calib_begin, t), pred, alpha,
                                    config.nexcp_rho);
                break;
            case MethodVariant::EnbPI: {
                const Eigen::Index begin =
                    std::max(calib_begin, t - static_cast<Eigen::Index>(
                                                  config.enbpi_window));
                pi = enbpi_interval(revealed(begin, t), pred, alpha);
                break;
            }
            case MethodVariant::KnnCP:
                pi = knn_cp_interval(
                    data.features.middleRows(calib_begin, t - calib_begin),
                    revealed(calib_begin, t), data.features.row(t),
                    config.knn_top_share, pred, alpha);
                break;
            case MethodVariant::HopCPT: {
                const Eigen::Index mem_end =
                    config.hopcpt_memory == HopMemory::CalibOnly ? calib_end : t;
                pi = session->interval(
                    t, calib_begin, mem_end, alpha, config,
                    rng::stream_seed(seed, 0x33, static_cast<std::uint64_t>(t)));
                break;
            }
        }
        out.push_back(pi);
        if (adaptive) adaptive_update(*adaptive, pi.covers(data.targets[t]));
    }
    return out;
}

}  // namespace tscp
