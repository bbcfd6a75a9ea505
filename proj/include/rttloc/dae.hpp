#pragma once

// Per-reference-point denoising autoencoders with tied weights.
//
// A model with depth L has encoder layers W_1..W_L; the decoder of layer l
// uses W_l^T with its own bias. Depth 1 is the plain shallow autoencoder:
//
//   h     = sigmoid(W v + b_enc)          (dropout on h while training)
//   s_hat = sigmoid(W^T h + b_dec)
//
// Loss is the mean squared reconstruction error over the K inputs.

#include "rttloc/corruption.hpp"
#include "rttloc/fingerprint.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace rttloc {

struct DaeLayer {
    Eigen::MatrixXd W;      ///< out x in
    Eigen::VectorXd b_enc;  ///< out
    Eigen::VectorXd b_dec;  ///< in

    friend bool operator==(const DaeLayer& a, const DaeLayer& b) {
        return a.W.rows() == b.W.rows() && a.W.cols() == b.W.cols() && a.W == b.W &&
               a.b_enc.size() == b.b_enc.size() && a.b_enc == b.b_enc &&
               a.b_dec.size() == b.b_dec.size() && a.b_dec == b.b_dec;
    }
};

struct TrainMeta {
    int epochs_run = 0;
    int best_epoch = 0;
    double final_train_mse = 0.0;
    double final_val_mse = 0.0;

    friend bool operator==(const TrainMeta&, const TrainMeta&) = default;
};

struct DaeModel {
    int ref_point_id = 0;
    Point2 location;
    std::vector<DaeLayer> layers;
    TrainMeta train_meta;

    std::size_t input_dim() const noexcept;
    std::size_t hidden_dim() const noexcept;  ///< width of the first hidden layer
    std::size_t depth() const noexcept { return layers.size(); }
    bool all_finite() const;

    /// All parameters zero. `hidden` lists the widths of successive hidden layers.
    static DaeModel zeros(std::size_t input_dim, std::span<const std::size_t> hidden);
    /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
    static DaeModel random(std::size_t input_dim, std::span<const std::size_t> hidden, Rng& rng);

    friend bool operator==(const DaeModel&, const DaeModel&) = default;
};

/// Hidden widths for an input of size K: ceil(K/2) by default, halving per extra layer.
std::vector<std::size_t> hidden_layout(std::size_t input_dim, std::size_t first_hidden, std::size_t depth);

/// Keep-masks (1 = kept) for each encoder layer plus the rate used for inverted scaling.
struct Dropout {
    double rate = 0.0;
    std::vector<Eigen::VectorXd> keep;

    static Dropout sample(const DaeModel& m, double rate, Rng& rng);
    static Dropout all_kept(const DaeModel& m, double rate);
};

struct ForwardResult {
    Eigen::VectorXd h;      ///< deepest hidden layer, after dropout
    Eigen::VectorXd s_hat;  ///< reconstruction
    // Activations kept for backward: encoder outputs (after dropout) and decoder outputs.
    std::vector<Eigen::VectorXd> encoder_pre_dropout;
    std::vector<Eigen::VectorXd> encoder_out;
    std::vector<Eigen::VectorXd> decoder_out;
};

struct Gradients {
    std::vector<DaeLayer> layers;  ///< same shapes as the model
};

/// Throws ValidationError on dimension mismatch.
ForwardResult forward(const DaeModel& m, const NormalizedVector& v, const Dropout* dropout = nullptr);

/// Mean squared error. Throws ValidationError if lengths differ.
double loss(const Eigen::VectorXd& s_hat, const Eigen::VectorXd& s_clean);

/// Exact gradients of loss(forward(m, v_corrupt, dropout).s_hat, s_clean).
Gradients backward(const DaeModel& m, const NormalizedVector& v_corrupt, const NormalizedVector& s_clean,
                   const Dropout* dropout = nullptr);

struct TrainConfig {
    int max_epochs = 3000;
    int patience = 50;
    double dropout_rate = 0.30;
    double learning_rate = 0.05;
    double val_fraction = 0.2;
    std::size_t hidden_dim = 0;  ///< 0 selects ceil(K/2)
    std::size_t stack_depth = 1;
    CorruptionConfig corruption;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Trains one model on the normalized scans of a single reference point.
/// `placeholder` is the normalized undetected value used by masking corruption.
/// Returns the parameters of the best validation epoch (epoch 0 = initialization).
DaeModel train(std::span<const NormalizedVector> scans, const TrainConfig& cfg, const NormalizedVector& placeholder);

/// M independent models sharing one normalizer.
class ModelRegistry {
public:
    ModelRegistry() = default;
    explicit ModelRegistry(NormParams norm) : norm_(std::move(norm)) {}

    const NormParams& norm() const noexcept { return norm_; }
    const std::map<int, DaeModel>& models() const noexcept { return models_; }
    std::size_t size() const noexcept { return models_.size(); }
    std::size_t input_dim() const noexcept { return norm_.size(); }

    /// Throws ValidationError on a duplicate id or a dimension mismatch.
    void add(DaeModel m);
    /// Replaces (or inserts) one model; other models are untouched.
    void put(DaeModel m);
    const DaeModel& at(int id) const;

    friend bool operator==(const ModelRegistry&, const ModelRegistry&) = default;

private:
    NormParams norm_;
    std::map<int, DaeModel> models_;
};

/// Seed of the training stream for one reference point.
std::uint64_t model_seed(std::uint64_t seed, int ref_point_id);

/// Fits the normalizer on all `training` rows, then trains one model per
/// reference point in `ids` (all testbed points when empty). Rows whose ref_id
/// is not selected are still used for the normalizer. `threads` = 0 picks the
/// hardware concurrency. Results do not depend on the thread count.
ModelRegistry train_registry(const Testbed& testbed, std::span<const ScanRecord> training, const TrainConfig& cfg,
                             std::span<const int> ids = {}, unsigned threads = 1);

/// Per-model reconstruction MSE, in registry (ascending id) order. No dropout.
std::vector<double> reconstruction_errors(const ModelRegistry& registry, const NormalizedVector& s);

}  // namespace rttloc
