#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rfprint/dataset.hpp"
#include "rfprint/nn/model.hpp"

namespace rfprint::nn {

struct TrainConfig {
    double initial_lr = 0.02;
    double lr_drop_factor = 0.1;
    std::size_t lr_drop_period = 9;
    double momentum = 0.9;
    std::size_t batch_size = 128;
    std::size_t epochs = 30;
    std::uint64_t seed = 1;

    void validate() const;
};

/// initial_lr * drop_factor^floor(epoch / period).
double learning_rate(const TrainConfig& cfg, std::size_t epoch);

struct SgdState {
    std::vector<std::vector<float>> velocity;
};

/// v <- momentum * v + g; p <- p - lr * v. Sizes the state on first use.
void sgd_momentum_step(std::span<Tensor* const> params, std::span<Tensor* const> grads, SgdState& state,
                       double lr, double momentum);

struct EpochMetrics {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

/// Trains in place. Throws DivergenceError on a non-finite loss. A trailing
/// single-frame batch is skipped because batch norm needs two samples.
std::vector<EpochMetrics> train(Model& model, const Dataset& ds, std::span<const std::size_t> train_split,
                                std::span<const std::size_t> val_split, const TrainConfig& cfg,
                                const std::function<void(const EpochMetrics&)>& on_epoch = {});

struct Evaluation {
    double accuracy = 0.0;
    /// confusion[i][j]: frames of class i predicted as j.
    std::vector<std::vector<std::uint64_t>> confusion;
};

/// Inference-mode accuracy and confusion matrix over `split`.
Evaluation evaluate(Model& model, const Dataset& ds, std::span<const std::size_t> split,
                    std::size_t batch_size = 256);

/// Predicted class per index of `split`.
std::vector<std::uint8_t> predict(Model& model, const Dataset& ds, std::span<const std::size_t> split,
                                  std::size_t batch_size = 256);

void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> metrics);
void save_metrics_csv(const std::string& path, std::span<const EpochMetrics> metrics);
void write_confusion_csv(std::ostream& out, const Evaluation& eval);
void save_confusion_csv(const std::string& path, const Evaluation& eval);

}  // namespace rfprint::nn
