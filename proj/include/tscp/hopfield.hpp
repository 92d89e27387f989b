#pragma once

#include "tscp/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

// Learned soft retrieval over past prediction errors.
//
// Each time step is encoded by a two-layer MLP (ReLU hidden layer, linear
// output) over configurable step inputs, concatenated with a relative time
// channel t / total_steps.  A query step attends over history steps through
// learned query/key projections and a softmax with inverse temperature beta;
// the resulting weight row is a distribution over past errors that downstream
// code turns into interval bounds.  Training minimizes the mean squared gap
// between each step's absolute error and the attention-weighted average of
// the other steps' absolute errors, with the self-association masked.
//
// Gradients are computed analytically (see loss_and_gradients); the test
// suite checks them against central finite differences.  All randomness
// (init, dropout, sampling) is seed-deterministic.

namespace tscp {

// Which per-step values feed the encoder.
enum class EncoderInputs { PredictionOnly, FeaturesOnly, PredictionAndFeatures };

struct HopfieldModel {
    // hidden = relu(mlp_w1 * z + mlp_b1); code = mlp_w2 * hidden + mlp_b2
    Eigen::MatrixXd mlp_w1;  // hidden_dim x d_in
    Eigen::VectorXd mlp_b1;  // hidden_dim
    Eigen::MatrixXd mlp_w2;  // code_dim x hidden_dim
    Eigen::VectorXd mlp_b2;  // code_dim
    // attention projections act on [code ; time], dimension code_dim + 1
    Eigen::MatrixXd wq;  // assoc_dim x (code_dim + 1)
    Eigen::MatrixXd wk;  // assoc_dim x (code_dim + 1)
    double beta = 1.0;
    double dropout_rate = 0.0;
    bool use_time_encoding = false;
    EncoderInputs inputs = EncoderInputs::PredictionAndFeatures;
    // per-input standardization, recorded at training time
    Eigen::VectorXd input_mean;  // d_in
    Eigen::VectorXd input_std;   // d_in, strictly positive

    Eigen::Index d_in() const { return mlp_w1.cols(); }
    Eigen::Index hidden_dim() const { return mlp_w1.rows(); }
    Eigen::Index code_dim() const { return mlp_w2.rows(); }
    Eigen::Index assoc_dim() const { return wq.rows(); }

    void validate() const;
};

// Uniform fan-in-scaled init, U(-1/sqrt(fan_in), +1/sqrt(fan_in)) for every
// weight and bias, drawn in a fixed tensor order from mt19937_64(seed).
// beta <= 0 selects the default 1/sqrt(assoc_dim).
HopfieldModel init_hopfield_model(Eigen::Index d_in, Eigen::Index hidden_dim,
                                  Eigen::Index code_dim, Eigen::Index assoc_dim,
                                  double beta, double dropout_rate,
                                  bool use_time_encoding, EncoderInputs inputs,
                                  std::uint64_t seed);

// Row-stochastic attention weights, n_query x n_key.
struct AssociationMatrix {
    Eigen::MatrixXd a;
    bool masked_diagonal = false;

    // rows sum to 1 within 1e-6, entries in [0,1], zero diagonal when masked
    void validate() const;
};

// Builds the d_in encoder input matrix for a dataset slice according to the
// input mode (prediction column and/or raw features).
Eigen::MatrixXd assemble_encoder_inputs(const TimeSeriesDataset& data,
                                        EncoderInputs mode);

// Encodes rows of `inputs` (T x d_in) to [code ; time], T x (code_dim + 1).
// The time channel is timestamps[i] / total_steps, or 0 when time encoding is
// disabled (the channel is zeroed, never removed).  With training = true,
// inverted dropout is applied to the hidden layer using mt19937_64(dropout_seed).
Eigen::MatrixXd encode(const HopfieldModel& model, const Eigen::MatrixXd& inputs,
                       std::span<const std::int64_t> timestamps,
                       std::int64_t total_steps, bool training = false,
                       std::uint64_t dropout_seed = 0);

// softmax(beta * (wq q) . (wk k)) over keys, one row per query row.
// mask_self requires square shapes and removes each row's own key.
AssociationMatrix associate(const HopfieldModel& model,
                            const Eigen::MatrixXd& query_codes,
                            const Eigen::MatrixXd& key_codes, bool mask_self);

// Attention weights of a single query row over key rows, as a WeightVector.
WeightVector associate_query(const HopfieldModel& model,
                             const Eigen::RowVectorXd& query_code,
                             const Eigen::MatrixXd& key_codes);

// (1/T) * sum_t (abs_errors[t] - sum_j A[t,j] * abs_errors[j])^2
double training_loss(const AssociationMatrix& assoc,
                     const Eigen::VectorXd& abs_errors);

struct HopfieldGradients {
    Eigen::MatrixXd mlp_w1;
    Eigen::VectorXd mlp_b1;
    Eigen::MatrixXd mlp_w2;
    Eigen::VectorXd mlp_b2;
    Eigen::MatrixXd wq;
    Eigen::MatrixXd wk;
};

// Forward pass plus exact analytic gradients of the self-masked training
// loss with respect to every trainable tensor.  Returns the loss.  With
// training = true the same dropout mask is used in forward and backward.
double loss_and_gradients(const HopfieldModel& model,
                          const Eigen::MatrixXd& inputs,
                          std::span<const std::int64_t> timestamps,
                          std::int64_t total_steps,
                          const Eigen::VectorXd& abs_errors,
                          HopfieldGradients& grads, bool training = false,
                          std::uint64_t dropout_seed = 0);

// Gradient-only convenience wrapper (no dropout).
HopfieldGradients backward(const HopfieldModel& model,
                           const Eigen::MatrixXd& inputs,
                           std::span<const std::int64_t> timestamps,
                           std::int64_t total_steps,
                           const Eigen::VectorXd& abs_errors);

// One validation snapshot recorded during training, and the selection rule:
// among candidates with delta_cov >= 0 pick the smallest pi_width; if none
// qualify pick the largest delta_cov; ties go to the lowest index.
struct ValidationPoint {
    double delta_cov = 0.0;
    double pi_width = 0.0;
};

std::size_t select_model(std::span<const ValidationPoint> candidates);

struct TrainConfig {
    int epochs = 3000;
    int validate_every = 5;
    double learning_rate = 1e-3;
    double dropout = 0.0;
    bool use_time_encoding = false;
    EncoderInputs inputs = EncoderInputs::PredictionAndFeatures;
    Eigen::Index hidden_dim = 64;
    Eigen::Index code_dim = 16;
    Eigen::Index assoc_dim = 16;
    double beta = 0.0;  // <= 0 means 1/sqrt(assoc_dim)
    // AdamW
    double weight_decay = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 0;  // series per update step; 0 = all series
    // miscoverage level used for the validation metric
    double valid_alpha = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainResult {
    HopfieldModel model;                   // selected checkpoint
    std::vector<ValidationPoint> history;  // one entry per validation pass
    std::size_t selected = 0;              // index into history
    double final_train_loss = 0.0;         // selected model, training half
};

// Trains on the calibration segments of the given series (multi-series
// batches iterate series within an update step).  Each calibration segment
// is halved: the first half supplies the training loss, the second half the
// validation metric (intervals via the weighted-ECDF quantile over the
// training half plus already-revealed validation steps).  The returned model
// is the checkpoint chosen by select_model.  Bitwise deterministic given
// (seed, config, data).  Requires every calibration segment length >= 8 and
// errors present.
TrainResult train_hopfield(std::span<const TimeSeriesDataset> series,
                           std::span<const SplitSpec> splits,
                           const TrainConfig& config);

TrainResult train_hopfield(const TimeSeriesDataset& data, const SplitSpec& split,
                           const TrainConfig& config);

// Versioned JSON checkpoint with full-precision tensors; load(save(m)) == m.
void save_checkpoint(const HopfieldModel& model, const std::string& path);
HopfieldModel load_checkpoint(const std::string& path);

}  // namespace tscp
