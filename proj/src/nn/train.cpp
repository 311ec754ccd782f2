#include "rfprint/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "rfprint/error.hpp"

namespace rfprint::nn {

namespace {

std::vector<std::uint8_t> labels_of(const Dataset& ds, std::span<const std::size_t> batch) {
    std::vector<std::uint8_t> labels(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = ds.frames.at(batch[i]).label;
    return labels;
}

std::uint8_t argmax_row(const Tensor& t, std::size_t row) {
    const std::size_t u = t.dim(1);
    const float* p = t.data() + row * u;
    return static_cast<std::uint8_t>(std::max_element(p, p + u) - p);
}

}  // namespace

void TrainConfig::validate() const {
    if (!(initial_lr > 0.0) || !std::isfinite(initial_lr)) throw InvalidArgument("train: learning rate must be > 0");
    if (!(lr_drop_factor > 0.0 && lr_drop_factor <= 1.0)) throw InvalidArgument("train: drop factor must lie in (0, 1]");
    if (lr_drop_period < 1) throw InvalidArgument("train: drop period must be >= 1");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("train: momentum must lie in [0, 1)");
    if (batch_size < 2) throw InvalidArgument("train: batch size must be >= 2 for batch norm");
}

double learning_rate(const TrainConfig& cfg, std::size_t epoch) {
    return cfg.initial_lr * std::pow(cfg.lr_drop_factor, static_cast<double>(epoch / cfg.lr_drop_period));
}

void sgd_momentum_step(std::span<Tensor* const> params, std::span<Tensor* const> grads, SgdState& state, double lr,
                       double momentum) {
    if (params.size() != grads.size()) throw ShapeMismatch("sgd: parameter and gradient counts differ");
    if (state.velocity.empty()) {
        state.velocity.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) state.velocity[i].assign(params[i]->size(), 0.0f);
    }
    if (state.velocity.size() != params.size()) throw ShapeMismatch("sgd: optimizer state does not match parameters");
    const auto mu = static_cast<float>(momentum);
    const auto step = static_cast<float>(lr);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        auto& v = state.velocity[i];
        if (g.size() != p.size() || v.size() != p.size())
            throw ShapeMismatch("sgd: size mismatch for parameter " + std::to_string(i));
        for (std::size_t j = 0; j < p.size(); ++j) {
            v[j] = mu * v[j] + g[j];
            p[j] -= step * v[j];
        }
    }
}

std::vector<EpochMetrics> train(Model& model, const Dataset& ds, std::span<const std::size_t> train_split,
                                std::span<const std::size_t> val_split, const TrainConfig& cfg,
                                const std::function<void(const EpochMetrics&)>& on_epoch) {
    cfg.validate();
    if (train_split.empty() || val_split.empty()) throw InvalidArgument("train: empty training or validation split");
    if (model.config().classes != ds.device_count())
        throw InvalidArgument("train: model has " + std::to_string(model.config().classes) + " classes but the dataset has " +
                              std::to_string(ds.device_count()) + " devices");
    SgdState state;
    std::vector<EpochMetrics> history;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = learning_rate(cfg, epoch);
        const auto batches = iterate_minibatches(ds, train_split, cfg.batch_size, cfg.seed, epoch);
        double loss_sum = 0.0;
        std::size_t correct = 0, seen = 0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& batch = batches[b];
            if (batch.size() < 2) continue;
            const Tensor x = frames_to_tensor(ds.frames, batch);
            const auto labels = labels_of(ds, batch);
            Rng drop = Rng(derive_seed({cfg.seed, static_cast<std::uint64_t>(Stream::Dropout), epoch, b}));
            const Tensor logits = model.forward(x, Mode::Train, &drop);
            const auto sx = softmax_xent(logits, labels);
            if (!std::isfinite(sx.loss))
                throw DivergenceError("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(b));
            loss_sum += sx.loss * static_cast<double>(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i) correct += argmax_row(sx.probs, i) == labels[i];
            seen += batch.size();
            model.backward(softmax_xent_backward(sx.probs, labels));
            sgd_momentum_step(model.parameters(), model.gradients(), state, lr, cfg.momentum);
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.lr = lr;
        m.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
        m.train_acc = seen ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0;
        m.val_acc = evaluate(model, ds, val_split).accuracy;
        history.push_back(m);
        if (on_epoch) on_epoch(m);
    }
    return history;
}

std::vector<std::uint8_t> predict(Model& model, const Dataset& ds, std::span<const std::size_t> split,
                                  std::size_t batch_size) {
    if (batch_size == 0) throw InvalidArgument("predict: batch size must be >= 1");
    std::vector<std::uint8_t> out;
    out.reserve(split.size());
    for (std::size_t start = 0; start < split.size(); start += batch_size) {
        const auto batch = split.subspan(start, std::min(batch_size, split.size() - start));
        const Tensor logits = model.forward(frames_to_tensor(ds.frames, batch), Mode::Infer);
        for (std::size_t i = 0; i < batch.size(); ++i) out.push_back(argmax_row(logits, i));
    }
    return out;
}

Evaluation evaluate(Model& model, const Dataset& ds, std::span<const std::size_t> split, std::size_t batch_size) {
    if (split.empty()) throw InvalidArgument("evaluate: empty split");
    const std::size_t classes = model.config().classes;
    if (classes != ds.device_count())
        throw InvalidArgument("evaluate: model has " + std::to_string(classes) + " classes but the dataset has " +
                              std::to_string(ds.device_count()) + " devices");
    Evaluation ev;
    ev.confusion.assign(classes, std::vector<std::uint64_t>(classes, 0));
    const auto predicted = predict(model, ds, split, batch_size);
    std::uint64_t hits = 0;
    for (std::size_t i = 0; i < split.size(); ++i) {
        const auto truth = ds.frames.at(split[i]).label;
        ++ev.confusion.at(truth).at(predicted[i]);
        hits += truth == predicted[i];
    }
    ev.accuracy = static_cast<double>(hits) / static_cast<double>(split.size());
    return ev;
}

void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> metrics) {
    const auto old = out.precision(9);
    out << "epoch,lr,train_loss,train_acc,val_acc\n";
    for (const auto& m : metrics)
        out << m.epoch << ',' << m.lr << ',' << m.train_loss << ',' << m.train_acc << ',' << m.val_acc << '\n';
    out.precision(old);
}

void save_metrics_csv(const std::string& path, std::span<const EpochMetrics> metrics) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write metrics log '" + path + "'");
    write_metrics_csv(out, metrics);
    if (!out) throw IoError("metrics write failed");
}

void write_confusion_csv(std::ostream& out, const Evaluation& eval) {
    for (const auto& row : eval.confusion) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
        out << '\n';
    }
}

void save_confusion_csv(const std::string& path, const Evaluation& eval) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write confusion matrix '" + path + "'");
    write_confusion_csv(out, eval);
    if (!out) throw IoError("confusion write failed");
}

}  // namespace rfprint::nn
