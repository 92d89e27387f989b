#include "tscp/hopfield.hpp"

#include "tscp/quantile.hpp"
#include "tscp/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace tscp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
}

}  // namespace

void HopfieldModel::validate() const {
    require(mlp_w1.rows() >= 1 && mlp_w1.cols() >= 1, "hopfield: empty mlp_w1");
    require(mlp_b1.size() == mlp_w1.rows(), "hopfield: mlp_b1 size mismatch");
    require(mlp_w2.cols() == mlp_w1.rows(), "hopfield: mlp_w2 columns != hidden dim");
    require(mlp_b2.size() == mlp_w2.rows(), "hopfield: mlp_b2 size mismatch");
    require(wq.cols() == mlp_w2.rows() + 1, "hopfield: wq columns != code dim + 1");
    require(wk.rows() == wq.rows() && wk.cols() == wq.cols(),
            "hopfield: wk shape != wq shape");
    require(beta > 0.0, "hopfield: beta must be > 0");
    require(dropout_rate >= 0.0 && dropout_rate < 1.0,
            "hopfield: dropout_rate must lie in [0, 1)");
    require(input_mean.size() == mlp_w1.cols(), "hopfield: input_mean size mismatch");
    require(input_std.size() == mlp_w1.cols(), "hopfield: input_std size mismatch");
    require((input_std.array() > 0.0).all(), "hopfield: input_std must be positive");
}

HopfieldModel init_hopfield_model(Eigen::Index d_in, Eigen::Index hidden_dim,
                                  Eigen::Index code_dim, Eigen::Index assoc_dim,
                                  double beta, double dropout_rate,
                                  bool use_time_encoding, EncoderInputs inputs,
                                  std::uint64_t seed) {
    require(d_in >= 1 && hidden_dim >= 1 && code_dim >= 1 && assoc_dim >= 1,
            "hopfield: all dimensions must be >= 1");
    rng::Engine eng(seed);
    auto fill = [&eng](Eigen::MatrixXd& m, Eigen::Index fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                m(r, c) = rng::uniform(eng, -bound, bound);
            }
        }
    };
    auto fill_vec = [&eng](Eigen::VectorXd& v, Eigen::Index fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            v[i] = rng::uniform(eng, -bound, bound);
        }
    };

    HopfieldModel m;
    m.mlp_w1.resize(hidden_dim, d_in);
    m.mlp_b1.resize(hidden_dim);
    m.mlp_w2.resize(code_dim, hidden_dim);
    m.mlp_b2.resize(code_dim);
    m.wq.resize(assoc_dim, code_dim + 1);
    m.wk.resize(assoc_dim, code_dim + 1);
    fill(m.mlp_w1, d_in);
    fill_vec(m.mlp_b1, d_in);
    fill(m.mlp_w2, hidden_dim);
    fill_vec(m.mlp_b2, hidden_dim);
    fill(m.wq, code_dim + 1);
    fill(m.wk, code_dim + 1);
    m.beta = beta > 0.0 ? beta : 1.0 / std::sqrt(static_cast<double>(assoc_dim));
    m.dropout_rate = dropout_rate;
    m.use_time_encoding = use_time_encoding;
    m.inputs = inputs;
    m.input_mean = Eigen::VectorXd::Zero(d_in);
    m.input_std = Eigen::VectorXd::Ones(d_in);
    m.validate();
    return m;
}

void AssociationMatrix::validate() const {
    const Eigen::Index rows = a.rows();
    const Eigen::Index cols = a.cols();
    require(rows >= 1 && cols >= 1, "association: empty matrix");
    if (masked_diagonal) {
        require(rows == cols, "association: masked diagonal requires square shape");
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double v = a(i, j);
            require(v >= 0.0 && v <= 1.0, "association: entry outside [0, 1]");
            sum += v;
        }
        require(std::abs(sum - 1.0) <= 1e-6, "association: row sum differs from 1");
        if (masked_diagonal) {
            require(a(i, i) == 0.0, "association: masked diagonal entry not 0");
        }
    }
}

Eigen::MatrixXd assemble_encoder_inputs(const TimeSeriesDataset& data,
                                        EncoderInputs mode) {
    const Eigen::Index t = data.size();
    if (mode != EncoderInputs::FeaturesOnly && !data.has_predictions()) {
        throw std::invalid_argument(
            "assemble_encoder_inputs: predictions required for this input mode");
    }
    switch (mode) {
        case EncoderInputs::PredictionOnly:
            return data.predictions;
        case EncoderInputs::FeaturesOnly:
            if (data.n_features() == 0) {
                throw std::invalid_argument(
                    "assemble_encoder_inputs: dataset has no features");
            }
            return data.features;
        case EncoderInputs::PredictionAndFeatures: {
            Eigen::MatrixXd z(t, 1 + data.n_features());
            z.col(0) = data.predictions;
            z.rightCols(data.n_features()) = data.features;
            return z;
        }
    }
    throw std::invalid_argument("assemble_encoder_inputs: unknown input mode");
}

namespace {

// Everything the backward pass needs from the forward pass.
struct ForwardCache {
    Eigen::MatrixXd z_std;    // T x d_in
    Eigen::MatrixXd h_pre;    // T x h
    Eigen::MatrixXd h_drop;   // T x h (post-ReLU, post-dropout)
    Eigen::MatrixXd drop_mask;// T x h, entries 0 or 1/(1-p); empty if unused
    Eigen::MatrixXd codes;    // T x (d_e + 1)
};

ForwardCache encode_forward(const HopfieldModel& model,
                            const Eigen::MatrixXd& inputs,
                            std::span<const std::int64_t> timestamps,
                            std::int64_t total_steps, bool training,
                            std::uint64_t dropout_seed) {
    model.validate();
    const Eigen::Index t = inputs.rows();
    require(inputs.cols() == model.d_in(), "encode: input width != model d_in");
    require(static_cast<Eigen::Index>(timestamps.size()) == t,
            "encode: timestamps length != input rows");
    require(total_steps >= 1, "encode: total_steps must be >= 1");

    ForwardCache fc;
    fc.z_std.resize(t, inputs.cols());
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
        fc.z_std.col(c) =
            (inputs.col(c).array() - model.input_mean[c]) / model.input_std[c];
    }
    fc.h_pre = (fc.z_std * model.mlp_w1.transpose()).rowwise() +
               model.mlp_b1.transpose();
    Eigen::MatrixXd h = fc.h_pre.cwiseMax(0.0);
    if (training && model.dropout_rate > 0.0) {
        const double keep_scale = 1.0 / (1.0 - model.dropout_rate);
        rng::Engine eng(dropout_seed);
        fc.drop_mask.resize(t, h.cols());
        for (Eigen::Index r = 0; r < t; ++r) {
            for (Eigen::Index c = 0; c < h.cols(); ++c) {
                fc.drop_mask(r, c) =
                    rng::uniform01(eng) >= model.dropout_rate ? keep_scale : 0.0;
            }
        }
        h = h.cwiseProduct(fc.drop_mask);
    }
    fc.h_drop = std::move(h);

    const Eigen::Index d_e = model.code_dim();
    fc.codes.resize(t, d_e + 1);
    fc.codes.leftCols(d_e) =
        (fc.h_drop * model.mlp_w2.transpose()).rowwise() + model.mlp_b2.transpose();
    for (Eigen::Index r = 0; r < t; ++r) {
        fc.codes(r, d_e) =
            model.use_time_encoding
                ? static_cast<double>(timestamps[static_cast<std::size_t>(r)]) /
                      static_cast<double>(total_steps)
                : 0.0;
    }
    return fc;
}

// Row-wise numerically stable softmax over logits; masked entries (logit
// == -inf) come out exactly 0 and a fully masked row is an error.
void softmax_rows_inplace(Eigen::MatrixXd& s) {
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        double mx = kNegInf;
        for (Eigen::Index c = 0; c < s.cols(); ++c) mx = std::max(mx, s(r, c));
        if (mx == kNegInf) {
            throw std::invalid_argument("associate: row with every key masked");
        }
        double sum = 0.0;
        for (Eigen::Index c = 0; c < s.cols(); ++c) {
            const double e = s(r, c) == kNegInf ? 0.0 : std::exp(s(r, c) - mx);
            s(r, c) = e;
            sum += e;
        }
        s.row(r) /= sum;
    }
}

Eigen::MatrixXd attention_rows(const HopfieldModel& model,
                               const Eigen::MatrixXd& query_codes,
                               const Eigen::MatrixXd& key_codes, bool mask_self) {
    require(query_codes.cols() == model.code_dim() + 1,
            "associate: query code width mismatch");
    require(key_codes.cols() == model.code_dim() + 1,
            "associate: key code width mismatch");
    if (mask_self) {
        require(query_codes.rows() == key_codes.rows(),
                "associate: mask_self requires square association");
    }
    const Eigen::MatrixXd q = query_codes * model.wq.transpose();
    const Eigen::MatrixXd k = key_codes * model.wk.transpose();
    Eigen::MatrixXd s = model.beta * (q * k.transpose());
    if (mask_self) {
        s.diagonal().setConstant(kNegInf);
    }
    softmax_rows_inplace(s);
    return s;
}

}  // namespace

Eigen::MatrixXd encode(const HopfieldModel& model, const Eigen::MatrixXd& inputs,
                       std::span<const std::int64_t> timestamps,
                       std::int64_t total_steps, bool training,
                       std::uint64_t dropout_seed) {
    return encode_forward(model, inputs, timestamps, total_steps, training,
                          dropout_seed)
        .codes;
}

AssociationMatrix associate(const HopfieldModel& model,
                            const Eigen::MatrixXd& query_codes,
                            const Eigen::MatrixXd& key_codes, bool mask_self) {
    model.validate();
    AssociationMatrix out;
    out.a = attention_rows(model, query_codes, key_codes, mask_self);
    out.masked_diagonal = mask_self;
    return out;
}

WeightVector associate_query(const HopfieldModel& model,
                             const Eigen::RowVectorXd& query_code,
                             const Eigen::MatrixXd& key_codes) {
    model.validate();
    const Eigen::MatrixXd row =
        attention_rows(model, query_code, key_codes, false);
    WeightVector w;
    w.w.assign(row.data(), row.data() + row.size());
    return w;
}

double training_loss(const AssociationMatrix& assoc,
                     const Eigen::VectorXd& abs_errors) {
    const Eigen::Index t = assoc.a.rows();
    require(assoc.a.cols() == t, "training_loss: association must be square");
    require(abs_errors.size() == t, "training_loss: abs_errors length mismatch");
    const Eigen::VectorXd r = abs_errors - assoc.a * abs_errors;
    return r.squaredNorm() / static_cast<double>(t);
}

double loss_and_gradients(const HopfieldModel& model,
                          const Eigen::MatrixXd& inputs,
                          std::span<const std::int64_t> timestamps,
                          std::int64_t total_steps,
                          const Eigen::VectorXd& abs_errors,
                          HopfieldGradients& grads, bool training,
                          std::uint64_t dropout_seed) {
    const Eigen::Index t = inputs.rows();
    require(t >= 2, "loss_and_gradients: need at least 2 steps");
    require(abs_errors.size() == t, "loss_and_gradients: abs_errors length mismatch");

    const ForwardCache fc = encode_forward(model, inputs, timestamps, total_steps,
                                           training, dropout_seed);
    const Eigen::MatrixXd q = fc.codes * model.wq.transpose();  // t x d_a
    const Eigen::MatrixXd k = fc.codes * model.wk.transpose();
    Eigen::MatrixXd a = model.beta * (q * k.transpose());
    a.diagonal().setConstant(kNegInf);
    softmax_rows_inplace(a);

    const Eigen::VectorXd& v = abs_errors;
    const Eigen::VectorXd r = v - a * v;
    const double loss = r.squaredNorm() / static_cast<double>(t);

    // dL/dA[i,j] = -(2/t) r_i v_j, then back through each row's softmax:
    // dS = A .* (dA - rowsum(dA .* A))
    const Eigen::VectorXd dr = (2.0 / static_cast<double>(t)) * r;
    Eigen::MatrixXd ds(t, t);
    for (Eigen::Index i = 0; i < t; ++i) {
        const Eigen::RowVectorXd da_row = -dr[i] * v.transpose();
        const double dot = da_row.cwiseProduct(a.row(i)).sum();
        ds.row(i) = a.row(i).cwiseProduct((da_row.array() - dot).matrix());
    }

    const Eigen::MatrixXd dq = model.beta * (ds * k);
    const Eigen::MatrixXd dk = model.beta * (ds.transpose() * q);
    grads.wq = dq.transpose() * fc.codes;
    grads.wk = dk.transpose() * fc.codes;

    const Eigen::MatrixXd dcodes = dq * model.wq + dk * model.wk;
    const Eigen::MatrixXd de = dcodes.leftCols(model.code_dim());
    grads.mlp_w2 = de.transpose() * fc.h_drop;
    grads.mlp_b2 = de.colwise().sum().transpose();

    Eigen::MatrixXd dh = de * model.mlp_w2;
    if (fc.drop_mask.size() > 0) {
        dh = dh.cwiseProduct(fc.drop_mask);
    }
    const Eigen::MatrixXd dh_pre =
        dh.cwiseProduct((fc.h_pre.array() > 0.0).cast<double>().matrix());
    grads.mlp_w1 = dh_pre.transpose() * fc.z_std;
    grads.mlp_b1 = dh_pre.colwise().sum().transpose();
    return loss;
}

HopfieldGradients backward(const HopfieldModel& model,
                           const Eigen::MatrixXd& inputs,
                           std::span<const std::int64_t> timestamps,
                           std::int64_t total_steps,
                           const Eigen::VectorXd& abs_errors) {
    HopfieldGradients grads;
    loss_and_gradients(model, inputs, timestamps, total_steps, abs_errors, grads,
                       false, 0);
    return grads;
}

std::size_t select_model(std::span<const ValidationPoint> candidates) {
    if (candidates.empty()) {
        throw std::invalid_argument("select_model: no candidates");
    }
    std::size_t best = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].delta_cov < 0.0) continue;
        if (best == candidates.size() ||
            candidates[i].pi_width < candidates[best].pi_width) {
            best = i;
        }
    }
    if (best != candidates.size()) return best;
    best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        if (candidates[i].delta_cov > candidates[best].delta_cov) best = i;
    }
    return best;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (validate_every < 1) {
        throw std::invalid_argument("train: validate_every must be >= 1");
    }
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("train: learning_rate must be > 0");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw std::invalid_argument("train: dropout must lie in [0, 1)");
    }
    if (hidden_dim < 1 || code_dim < 1 || assoc_dim < 1) {
        throw std::invalid_argument("train: dimensions must be >= 1");
    }
    if (!(valid_alpha > 0.0 && valid_alpha < 1.0)) {
        throw std::invalid_argument("train: valid_alpha must lie in (0, 1)");
    }
    if (weight_decay < 0.0) {
        throw std::invalid_argument("train: weight_decay must be >= 0");
    }
    if (batch_size < 0) throw std::invalid_argument("train: batch_size must be >= 0");
}

namespace {

// Calibration-segment view of one series, prepared for training.
struct SeriesContext {
    Eigen::MatrixXd z;                   // n_calib x d_in, raw (unstandardized)
    std::vector<std::int64_t> ts;        // n_calib
    std::int64_t total_steps = 0;
    Eigen::VectorXd err;                 // signed errors
    Eigen::VectorXd abs_err;
    Eigen::VectorXd targets;
    Eigen::VectorXd preds;
    Eigen::Index half = 0;               // training part = [0, half)
};

template <typename Tensor>
struct AdamState {
    Tensor m, v;
    explicit AdamState(const Tensor& shape)
        : m(Tensor::Zero(shape.rows(), shape.cols())),
          v(Tensor::Zero(shape.rows(), shape.cols())) {}
};

template <typename Tensor>
void adamw_update(Tensor& theta, const Tensor& grad, AdamState<Tensor>& st,
                  const TrainConfig& cfg, long step) {
    st.m = cfg.adam_beta1 * st.m + (1.0 - cfg.adam_beta1) * grad;
    st.v = cfg.adam_beta2 * st.v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
    theta.array() -= cfg.learning_rate *
                     ((st.m.array() / bc1) /
                          ((st.v.array() / bc2).sqrt() + cfg.adam_eps) +
                      cfg.weight_decay * theta.array());
}

// Validation metric: weighted-ECDF intervals for each step of the validation
// half, retrieving over the training half plus already-revealed validation
// steps.  Returns {delta_cov, mean width} at cfg.valid_alpha.
ValidationPoint validate_model(const HopfieldModel& model,
                               std::span<const SeriesContext> series,
                               const TrainConfig& cfg) {
    long covered = 0;
    long total = 0;
    double width_sum = 0.0;
    const QuantileLevel lo(cfg.valid_alpha / 2.0);
    const QuantileLevel hi(1.0 - cfg.valid_alpha / 2.0);
    for (const SeriesContext& sc : series) {
        const Eigen::MatrixXd codes =
            encode(model, sc.z, sc.ts, sc.total_steps, false, 0);
        const Eigen::MatrixXd qp = codes * model.wq.transpose();
        const Eigen::MatrixXd kp = codes * model.wk.transpose();
        for (Eigen::Index i = sc.half; i < sc.z.rows(); ++i) {
            Eigen::VectorXd logits = model.beta * (kp.topRows(i) * qp.row(i).transpose());
            const double mx = logits.maxCoeff();
            Eigen::ArrayXd expd = (logits.array() - mx).exp();
            expd /= expd.sum();
            WeightVector w;
            w.w.assign(expd.data(), expd.data() + expd.size());
            const std::span<const double> hist(sc.err.data(),
                                               static_cast<std::size_t>(i));
            const double lo_q = weighted_quantile_ecdf(hist, w, lo);
            const double hi_q = weighted_quantile_ecdf(hist, w, hi);
            const double lower = sc.preds[i] + lo_q;
            const double upper = sc.preds[i] + hi_q;
            width_sum += upper - lower;
            if (lower <= sc.targets[i] && sc.targets[i] <= upper) ++covered;
            ++total;
        }
    }
    ValidationPoint vp;
    const double miss = 1.0 - static_cast<double>(covered) / static_cast<double>(total);
    vp.delta_cov = cfg.valid_alpha - miss;
    vp.pi_width = width_sum / static_cast<double>(total);
    return vp;
}

}  // namespace

TrainResult train_hopfield(std::span<const TimeSeriesDataset> series,
                           std::span<const SplitSpec> splits,
                           const TrainConfig& config) {
    config.validate();
    if (series.empty() || series.size() != splits.size()) {
        throw std::invalid_argument("train: need matching, nonempty series/splits");
    }

    std::vector<SeriesContext> ctx;
    ctx.reserve(series.size());
    Eigen::Index d_in = -1;
    for (std::size_t s = 0; s < series.size(); ++s) {
        const TimeSeriesDataset& data = series[s];
        data.validate();
        splits[s].validate(data.size());
        if (!data.has_predictions()) {
            throw std::invalid_argument("train: series lacks base model predictions");
        }
        const Eigen::Index n_calib = splits[s].n_calib();
        if (n_calib < 8) {
            throw std::invalid_argument(
                "train: calibration segment must have at least 8 steps");
        }
        const Eigen::Index begin = splits[s].train_end;
        const Eigen::MatrixXd z_full = assemble_encoder_inputs(data, config.inputs);
        SeriesContext sc;
        sc.z = z_full.middleRows(begin, n_calib);
        sc.ts.assign(data.timestamps.begin() + begin,
                     data.timestamps.begin() + begin + n_calib);
        sc.total_steps = std::max<std::int64_t>(1, data.timestamps.back() + 1);
        sc.err = data.errors.segment(begin, n_calib);
        sc.abs_err = sc.err.cwiseAbs();
        sc.targets = data.targets.segment(begin, n_calib);
        sc.preds = data.predictions.segment(begin, n_calib);
        sc.half = n_calib / 2;
        if (d_in < 0) d_in = sc.z.cols();
        if (sc.z.cols() != d_in) {
            throw std::invalid_argument("train: series disagree on input width");
        }
        ctx.push_back(std::move(sc));
    }

    HopfieldModel model = init_hopfield_model(
        d_in, config.hidden_dim, config.code_dim, config.assoc_dim, config.beta,
        config.dropout, config.use_time_encoding, config.inputs,
        rng::stream_seed(config.seed, 0x11));

    // standardization over the pooled training halves
    {
        Eigen::Index rows = 0;
        for (const SeriesContext& sc : ctx) rows += sc.half;
        Eigen::MatrixXd pooled(rows, d_in);
        Eigen::Index at = 0;
        for (const SeriesContext& sc : ctx) {
            pooled.middleRows(at, sc.half) = sc.z.topRows(sc.half);
            at += sc.half;
        }
        model.input_mean.resize(d_in);
        model.input_std.resize(d_in);
        for (Eigen::Index j = 0; j < d_in; ++j) {
            const double mean = pooled.col(j).mean();
            const double var = (pooled.col(j).array() - mean).square().mean();
            const double sd = std::sqrt(var);
            model.input_mean[j] = mean;
            model.input_std[j] = sd < 1e-8 ? 1.0 : sd;  // constant input column
        }
    }

    AdamState<Eigen::MatrixXd> st_w1{model.mlp_w1}, st_w2{model.mlp_w2},
        st_wq{model.wq}, st_wk{model.wk};
    AdamState<Eigen::VectorXd> st_b1{model.mlp_b1}, st_b2{model.mlp_b2};

    const std::size_t n_series = ctx.size();
    const std::size_t batch =
        config.batch_size == 0
            ? n_series
            : std::min<std::size_t>(static_cast<std::size_t>(config.batch_size),
                                    n_series);

    std::vector<ValidationPoint> history;
    std::vector<HopfieldModel> checkpoints;
    long step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t start = 0; start < n_series; start += batch) {
            const std::size_t stop = std::min(start + batch, n_series);
            HopfieldGradients sum, g;
            double inv = 1.0 / static_cast<double>(stop - start);
            for (std::size_t s = start; s < stop; ++s) {
                const SeriesContext& sc = ctx[s];
                loss_and_gradients(
                    model, sc.z.topRows(sc.half),
                    std::span<const std::int64_t>(sc.ts.data(),
                                                  static_cast<std::size_t>(sc.half)),
                    sc.total_steps, sc.abs_err.head(sc.half), g, true,
                    rng::stream_seed(config.seed, 0x22,
                                     static_cast<std::uint64_t>(epoch), s));
                if (s == start) {
                    sum = g;
                } else {
                    sum.mlp_w1 += g.mlp_w1;
                    sum.mlp_b1 += g.mlp_b1;
                    sum.mlp_w2 += g.mlp_w2;
                    sum.mlp_b2 += g.mlp_b2;
                    sum.wq += g.wq;
                    sum.wk += g.wk;
                }
            }
            ++step;
            auto upd = [&](auto& theta, auto& grad, auto& state) {
                grad *= inv;
                adamw_update(theta, grad, state, config, step);
            };
            upd(model.mlp_w1, sum.mlp_w1, st_w1);
            upd(model.mlp_b1, sum.mlp_b1, st_b1);
            upd(model.mlp_w2, sum.mlp_w2, st_w2);
            upd(model.mlp_b2, sum.mlp_b2, st_b2);
            upd(model.wq, sum.wq, st_wq);
            upd(model.wk, sum.wk, st_wk);
        }
        if ((epoch + 1) % config.validate_every == 0 || epoch + 1 == config.epochs) {
            history.push_back(validate_model(model, ctx, config));
            checkpoints.push_back(model);
        }
    }

    TrainResult result;
    result.history = std::move(history);
    result.selected = select_model(result.history);
    result.model = checkpoints[result.selected];

    {  // training loss of the selected checkpoint, pooled over series
        double loss_sum = 0.0;
        for (const SeriesContext& sc : ctx) {
            const Eigen::MatrixXd codes = encode(
                result.model, sc.z.topRows(sc.half),
                std::span<const std::int64_t>(sc.ts.data(),
                                              static_cast<std::size_t>(sc.half)),
                sc.total_steps, false, 0);
            const AssociationMatrix a = associate(result.model, codes, codes, true);
            loss_sum += training_loss(a, sc.abs_err.head(sc.half));
        }
        result.final_train_loss = loss_sum / static_cast<double>(ctx.size());
    }
    return result;
}

TrainResult train_hopfield(const TimeSeriesDataset& data, const SplitSpec& split,
                           const TrainConfig& config) {
    return train_hopfield(std::span<const TimeSeriesDataset>(&data, 1),
                          std::span<const SplitSpec>(&split, 1), config);
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) {
        throw std::runtime_error("checkpoint: expected a nonempty array of rows");
    }
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw std::runtime_error("checkpoint: ragged matrix rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
    }
    return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
    }
    return v;
}

const char* inputs_name(EncoderInputs in) {
    switch (in) {
        case EncoderInputs::PredictionOnly: return "PredictionOnly";
        case EncoderInputs::FeaturesOnly: return "FeaturesOnly";
        case EncoderInputs::PredictionAndFeatures: return "PredictionAndFeatures";
    }
    return "PredictionAndFeatures";
}

EncoderInputs inputs_from_name(const std::string& name) {
    if (name == "PredictionOnly") return EncoderInputs::PredictionOnly;
    if (name == "FeaturesOnly") return EncoderInputs::FeaturesOnly;
    if (name == "PredictionAndFeatures") return EncoderInputs::PredictionAndFeatures;
    throw std::runtime_error("checkpoint: unknown encoder input mode '" + name + "'");
}

}  // namespace

void save_checkpoint(const HopfieldModel& model, const std::string& path) {
    model.validate();
    nlohmann::json j;
    j["format_version"] = 1;
    j["beta"] = model.beta;
    j["dropout_rate"] = model.dropout_rate;
    j["use_time_encoding"] = model.use_time_encoding;
    j["inputs"] = inputs_name(model.inputs);
    j["input_mean"] = vector_to_json(model.input_mean);
    j["input_std"] = vector_to_json(model.input_std);
    j["mlp_w1"] = matrix_to_json(model.mlp_w1);
    j["mlp_b1"] = vector_to_json(model.mlp_b1);
    j["mlp_w2"] = matrix_to_json(model.mlp_w2);
    j["mlp_b2"] = vector_to_json(model.mlp_b2);
    j["wq"] = matrix_to_json(model.wq);
    j["wk"] = matrix_to_json(model.wk);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump(1) << '\n';
}

HopfieldModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format_version", 0) != 1) {
        throw std::runtime_error("checkpoint: unsupported format_version");
    }
    HopfieldModel m;
    m.beta = j.at("beta").get<double>();
    m.dropout_rate = j.at("dropout_rate").get<double>();
    m.use_time_encoding = j.at("use_time_encoding").get<bool>();
    m.inputs = inputs_from_name(j.at("inputs").get<std::string>());
    m.input_mean = vector_from_json(j.at("input_mean"));
    m.input_std = vector_from_json(j.at("input_std"));
    m.mlp_w1 = matrix_from_json(j.at("mlp_w1"));
    m.mlp_b1 = vector_from_json(j.at("mlp_b1"));
    m.mlp_w2 = matrix_from_json(j.at("mlp_w2"));
    m.mlp_b2 = vector_from_json(j.at("mlp_b2"));
    m.wq = matrix_from_json(j.at("wq"));
    m.wk = matrix_from_json(j.at("wk"));
    m.validate();
    return m;
}

}  // namespace tscp
