#pragma once

// MSE loss, Adam, the epoch loop with best-validation retention, and the
// multi-variant ablation driver.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wcae/architecture.hpp"
#include "wcae/dataset.hpp"
#include "wcae/evaluation.hpp"

namespace wcae::train {

struct LossResult {
    double loss = 0.0;
    Tensor3 grad;  ///< 2 (pred - target) / count
};

LossResult mse_loss(const Tensor3& pred, const Tensor3& target);

struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t t = 0;
    std::vector<double> m;
    std::vector<double> v;
};

/// One bias-corrected Adam update of a flat parameter vector. m and v are
/// sized on the first call; later calls must pass the same size.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);
/// Same update over the learnable arrays of a network, concatenated in order.
void adam_step(const std::vector<nn::ArrayRef>& params, AdamState& state);

struct TrainConfig {
    std::size_t batch_size = 200;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
    double learning_rate = 1e-4;
    /// Assemble the next batch on a helper thread. Results are identical
    /// either way; this only overlaps copying with computation.
    bool prefetch = false;
    /// Called after every epoch.
    std::function<void(std::size_t epoch, double train_loss, double val_loss)> on_epoch;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  ///< 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_index = 0;  ///< 0-based index of the retained epoch

    double best_val_loss() const { return epochs.at(best_index).val_loss; }
    /// CSV with columns epoch,train_loss,val_loss,seconds (%.17g). With
    /// zero_seconds the wall-time column is written as 0 so reruns compare
    /// byte for byte.
    std::string to_csv(bool zero_seconds = false) const;
    static TrainHistory from_csv(std::string_view text);
};

struct TrainResult {
    arch::Network best;
    TrainHistory history;
};

/// Mean squared error of the network over a pair set in infer mode.
double evaluate_loss(const arch::Network& net, const data::PairSet& set, std::size_t batch_size = 200);

/// Trains a copy of net. Each epoch reshuffles the training pairs with a
/// stream derived from (seed, epoch); dropout in batch b of epoch e draws
/// from (seed, e, b). Validation runs in infer mode after every epoch and the
/// parameters with the lowest validation loss (earliest on ties) are
/// returned. Throws InvalidInput for empty roles and DivergenceError when a
/// batch loss is not finite.
TrainResult train(const arch::Network& net, const data::PairSet& train_set, const data::PairSet& validation_set,
                  const TrainConfig& cfg);

struct AblationConfig {
    std::vector<arch::ModelSpec> variants;
    std::size_t repetitions = 1;
    std::uint64_t seed = 0;
    TrainConfig train;
    std::vector<double> snr_eval{-10.0, -7.0, -3.0, -1.0, 3.0, 7.0, 10.0};
    unsigned eval_threads = 1;
    /// Called with a repetition seed; returns the data for that repetition.
    std::function<data::ExperimentData(std::uint64_t)> make_data;
    /// Progress hook: (variant label, repetition, history).
    std::function<void(const std::string&, std::size_t, const TrainHistory&)> on_run;
};

/// Seed of repetition r: derive_seed(seed, r). Data selection uses it
/// directly; model initialization and training use streams derived from it,
/// so every variant in a repetition sees the same data. Rows are numbered
/// 1..n in variant order.
eval::MetricsReport run_ablation(const AblationConfig& cfg);

std::uint64_t repetition_seed(std::uint64_t seed, std::size_t repetition);

}  // namespace wcae::train
