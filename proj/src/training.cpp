#include "wcae/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>

#include "wcae/rng.hpp"

namespace wcae::train {

LossResult mse_loss(const Tensor3& pred, const Tensor3& target) {
    if (pred.shape() != target.shape()) {
        throw InvalidInput("mse_loss: shapes differ (" + pred.shape().str() + " vs " + target.shape().str() + ")");
    }
    LossResult r{0.0, Tensor3(pred.shape())};
    const auto n = static_cast<double>(pred.size());
    const double* p = pred.data();
    const double* t = target.data();
    double* g = r.grad.data();
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = p[i] - t[i];
        r.loss += d * d;
        g[i] = 2.0 * d / n;
    }
    r.loss /= n;
    return r;
}

namespace {

void adam_update(double* p, const double* g, double* m, double* v, std::size_t n, const AdamState& s, double c1,
                 double c2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.epsilon);
    }
}

void prepare(AdamState& s, std::size_t n) {
    if (s.m.empty() && s.v.empty()) {
        s.m.assign(n, 0.0);
        s.v.assign(n, 0.0);
    }
    if (s.m.size() != n || s.v.size() != n) {
        throw InvalidInput("adam_step: state holds " + std::to_string(s.m.size()) + " moments for " +
                           std::to_string(n) + " parameters");
    }
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size()) throw InvalidInput("adam_step: parameter and gradient sizes differ");
    prepare(state, params.size());
    ++state.t;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    adam_update(params.data(), grads.data(), state.m.data(), state.v.data(), params.size(), state, c1, c2);
}

void adam_step(const std::vector<nn::ArrayRef>& params, AdamState& state) {
    std::size_t total = 0;
    for (const auto& a : params) {
        if (!a.learnable()) throw InvalidInput("adam_step: array " + a.name + " is not learnable");
        if (a.grad.size() != a.value.size()) throw InvalidInput("adam_step: gradient shape mismatch for " + a.name);
        total += a.value.size();
    }
    prepare(state, total);
    ++state.t;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    std::size_t offset = 0;
    for (const auto& a : params) {
        adam_update(a.value.data(), a.grad.data(), state.m.data() + offset, state.v.data() + offset, a.value.size(),
                    state, c1, c2);
        offset += a.value.size();
    }
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw InvalidInput("train: batch_size must be >= 1");
    if (epochs == 0) throw InvalidInput("train: epochs must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidInput("train: learning rate must be finite and non-negative");
    }
}

std::string TrainHistory::to_csv(bool zero_seconds) const {
    std::string out = "epoch,train_loss,val_loss,seconds\n";
    char buf[128];
    for (const auto& e : epochs) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_loss,
                      zero_seconds ? 0.0 : e.seconds);
        out += buf;
    }
    return out;
}

TrainHistory TrainHistory::from_csv(std::string_view text) {
    TrainHistory h;
    std::size_t pos = text.find('\n');
    if (pos == std::string_view::npos || text.substr(0, pos) != "epoch,train_loss,val_loss,seconds") {
        throw ParseError("history csv: unexpected header", 0);
    }
    ++pos;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string line(text.substr(pos, end - pos));
        const std::uint64_t offset = pos;
        pos = end + 1;
        if (line.empty()) continue;
        EpochRecord e;
        char tail = 0;
        if (std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf%c", &e.epoch, &e.train_loss, &e.val_loss, &e.seconds, &tail) != 4) {
            throw ParseError("history csv: malformed row", offset);
        }
        h.epochs.push_back(e);
    }
    if (h.epochs.empty()) throw ParseError("history csv: no rows", text.size());
    for (std::size_t i = 1; i < h.epochs.size(); ++i)
        if (h.epochs[i].val_loss < h.epochs[h.best_index].val_loss) h.best_index = i;
    return h;
}

double evaluate_loss(const arch::Network& net, const data::PairSet& set, std::size_t batch_size) {
    if (set.size() == 0) throw InvalidInput("evaluate_loss: empty set");
    double sum = 0.0;
    std::size_t count = 0;
    std::vector<std::size_t> idx;
    for (std::size_t lo = 0; lo < set.size(); lo += batch_size) {
        const std::size_t hi = std::min(set.size(), lo + batch_size);
        idx.resize(hi - lo);
        std::iota(idx.begin(), idx.end(), lo);
        const Tensor3 y = net.infer(set.noisy_batch(idx));
        const Tensor3 t = set.clean_batch(idx);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double d = y.data()[i] - t.data()[i];
            sum += d * d;
        }
        count += y.size();
    }
    return sum / static_cast<double>(count);
}

namespace {

enum : std::uint64_t { kShuffle = 0x5001, kDropout = 0x5002 };

struct Batch {
    Tensor3 noisy;
    Tensor3 clean;
};

}  // namespace

TrainResult train(const arch::Network& net, const data::PairSet& train_set, const data::PairSet& validation_set,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.size() == 0) throw InvalidInput("train: training set is empty");
    if (validation_set.size() == 0) throw InvalidInput("train: validation set is empty");
    if (train_set.width != net.spec().input_length || validation_set.width != net.spec().input_length) {
        throw InvalidInput("train: window width does not match the model input length");
    }

    arch::Network model = net;
    AdamState adam;
    adam.lr = cfg.learning_rate;
    TrainHistory history;
    std::vector<double> best;
    const auto params = model.parameters();

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(cfg.seed, kShuffle, epoch));
        shuffle_rng.shuffle(std::span(order));

        const std::size_t n_batches = (order.size() + cfg.batch_size - 1) / cfg.batch_size;
        auto assemble = [&](std::size_t b) {
            const std::size_t lo = b * cfg.batch_size;
            const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
            const std::span<const std::size_t> idx(order.data() + lo, hi - lo);
            return Batch{train_set.noisy_batch(idx), train_set.clean_batch(idx)};
        };

        double loss_sum = 0.0;
        std::future<Batch> pending;
        if (cfg.prefetch) pending = std::async(std::launch::async, assemble, 0);
        for (std::size_t b = 0; b < n_batches; ++b) {
            Batch batch = cfg.prefetch ? pending.get() : assemble(b);
            if (cfg.prefetch && b + 1 < n_batches) pending = std::async(std::launch::async, assemble, b + 1);

            Rng dropout_rng(derive_seed(cfg.seed, kDropout, epoch, b));
            nn::ForwardContext ctx{nn::Mode::Train, &dropout_rng};
            const Tensor3 y = model.forward(batch.noisy, ctx);
            const LossResult loss = mse_loss(y, batch.clean);
            if (!std::isfinite(loss.loss)) {
                throw DivergenceError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                          ", batch " + std::to_string(b + 1),
                                      static_cast<int>(epoch + 1), static_cast<int>(b + 1));
            }
            model.zero_grad();
            model.backward(loss.grad);
            adam_step(params, adam);
            loss_sum += loss.loss * static_cast<double>(batch.noisy.batch());
        }

        const double val = evaluate_loss(model, validation_set, cfg.batch_size);
        if (!std::isfinite(val)) {
            throw DivergenceError("training diverged: non-finite validation loss at epoch " + std::to_string(epoch + 1),
                                  static_cast<int>(epoch + 1), 0);
        }
        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.train_loss = loss_sum / static_cast<double>(train_set.size());
        rec.val_loss = val;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.epochs.push_back(rec);
        if (epoch == 0 || val < history.epochs[history.best_index].val_loss) {
            history.best_index = epoch;
            best = model.snapshot();
        }
        if (cfg.on_epoch) cfg.on_epoch(rec.epoch, rec.train_loss, rec.val_loss);
    }
    model.restore(best);
    return {std::move(model), std::move(history)};
}

std::uint64_t repetition_seed(std::uint64_t seed, std::size_t repetition) { return derive_seed(seed, repetition); }

eval::MetricsReport run_ablation(const AblationConfig& cfg) {
    if (cfg.variants.empty()) throw InvalidInput("run_ablation: no variants");
    if (cfg.repetitions == 0) throw InvalidInput("run_ablation: repetitions must be >= 1");
    if (!cfg.make_data) throw InvalidInput("run_ablation: no data source");

    std::vector<std::vector<eval::RunMetrics>> runs(cfg.variants.size());
    for (std::size_t r = 0; r < cfg.repetitions; ++r) {
        const std::uint64_t rep_seed = repetition_seed(cfg.seed, r);
        const data::ExperimentData data = cfg.make_data(rep_seed);
        for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
            arch::ModelSpec spec = cfg.variants[v];
            spec.seed = derive_seed(rep_seed, 0x1417);
            const arch::Network net = arch::build_model(spec);
            TrainConfig tc = cfg.train;
            tc.seed = derive_seed(rep_seed, 0x7a17);
            const TrainResult result = train(net, data.train, data.validation, tc);
            if (cfg.on_run) cfg.on_run(spec.label(), r, result.history);
            runs[v].push_back(eval::evaluate_model(result.best, data.test, cfg.snr_eval, cfg.eval_threads));
        }
    }
    eval::MetricsReport report;
    report.snr_columns = cfg.snr_eval;
    for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
        report.rows.push_back(eval::aggregate_runs(std::to_string(v + 1), cfg.variants[v], runs[v]));
    }
    return report;
}

}  // namespace wcae::train
