#include <cmath>
#include <string>

#include "wcae/nn.hpp"

namespace wcae::nn {

BatchNormState BatchNormState::identity(std::size_t channels) {
    BatchNormState s;
    s.gamma.assign(channels, 1.0);
    s.beta.assign(channels, 0.0);
    s.running_mean.assign(channels, 0.0);
    s.running_var.assign(channels, 1.0);
    return s;
}

namespace {

void check_channels(const Tensor3& x, const BatchNormState& s) {
    const std::size_t c = x.channels();
    if (s.gamma.size() != c || s.beta.size() != c || s.running_mean.size() != c || s.running_var.size() != c) {
        throw InvalidInput("batchnorm: state has " + std::to_string(s.gamma.size()) + " channels, input has " +
                           std::to_string(c));
    }
}

}  // namespace

Tensor3 batchnorm_infer(const Tensor3& x, const BatchNormState& s) {
    check_channels(x, s);
    const std::size_t c = x.channels();
    std::vector<double> scale(c), shift(c);
    for (std::size_t j = 0; j < c; ++j) {
        const double inv = 1.0 / std::sqrt(s.running_var[j] + s.epsilon);
        scale[j] = s.gamma[j] * inv;
        shift[j] = s.beta[j] - s.running_mean[j] * scale[j];
    }
    Tensor3 y(x.shape());
    const double* in = x.data();
    double* out = y.data();
    for (std::size_t i = 0; i < x.size(); i += c)
        for (std::size_t j = 0; j < c; ++j) out[i + j] = in[i + j] * scale[j] + shift[j];
    return y;
}

Tensor3 batchnorm_forward(const Tensor3& x, BatchNormState& s, Mode mode, BatchNormCache* cache) {
    check_channels(x, s);
    const std::size_t c = x.channels();
    const std::size_t count = x.batch() * x.length();

    if (mode == Mode::Infer) {
        if (cache) {
            cache->mode = Mode::Infer;
            cache->inv_std.resize(c);
            for (std::size_t j = 0; j < c; ++j) cache->inv_std[j] = 1.0 / std::sqrt(s.running_var[j] + s.epsilon);
            cache->xhat = Tensor3(x.shape());
            const double* in = x.data();
            double* xh = cache->xhat.data();
            for (std::size_t i = 0; i < x.size(); i += c)
                for (std::size_t j = 0; j < c; ++j) xh[i + j] = (in[i + j] - s.running_mean[j]) * cache->inv_std[j];
        }
        return batchnorm_infer(x, s);
    }

    if (count < 2) throw InvalidInput("batchnorm: train mode needs at least two samples per channel");

    std::vector<double> mean(c, 0.0), var(c, 0.0);
    const double* in = x.data();
    for (std::size_t i = 0; i < x.size(); i += c)
        for (std::size_t j = 0; j < c; ++j) mean[j] += in[i + j];
    for (auto& m : mean) m /= static_cast<double>(count);
    for (std::size_t i = 0; i < x.size(); i += c)
        for (std::size_t j = 0; j < c; ++j) {
            const double d = in[i + j] - mean[j];
            var[j] += d * d;
        }
    for (auto& v : var) v /= static_cast<double>(count);

    std::vector<double> inv_std(c);
    for (std::size_t j = 0; j < c; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + s.epsilon);

    Tensor3 y(x.shape());
    Tensor3 xhat(x.shape());
    double* out = y.data();
    double* xh = xhat.data();
    for (std::size_t i = 0; i < x.size(); i += c)
        for (std::size_t j = 0; j < c; ++j) {
            xh[i + j] = (in[i + j] - mean[j]) * inv_std[j];
            out[i + j] = s.gamma[j] * xh[i + j] + s.beta[j];
        }

    for (std::size_t j = 0; j < c; ++j) {
        s.running_mean[j] = s.momentum * s.running_mean[j] + (1.0 - s.momentum) * mean[j];
        s.running_var[j] = s.momentum * s.running_var[j] + (1.0 - s.momentum) * var[j];
    }
    if (cache) {
        cache->mode = Mode::Train;
        cache->inv_std = std::move(inv_std);
        cache->xhat = std::move(xhat);
    }
    return y;
}

BatchNormGrads batchnorm_backward(const Tensor3& grad_out, const BatchNormState& s, const BatchNormCache& cache) {
    check_channels(grad_out, s);
    const std::size_t c = grad_out.channels();
    if (cache.inv_std.size() != c) throw InvalidInput("batchnorm_backward: cache does not match state");
    BatchNormGrads g{Tensor3(grad_out.shape()), std::vector<double>(c, 0.0), std::vector<double>(c, 0.0)};
    const double* go = grad_out.data();
    double* gx = g.grad_x.data();

    if (cache.xhat.shape() != grad_out.shape()) throw InvalidInput("batchnorm_backward: grad_out shape mismatch");
    const double* xh = cache.xhat.data();

    if (cache.mode == Mode::Infer) {
        // Running statistics are constants here.
        for (std::size_t i = 0; i < grad_out.size(); i += c)
            for (std::size_t j = 0; j < c; ++j) {
                gx[i + j] = go[i + j] * s.gamma[j] * cache.inv_std[j];
                g.grad_beta[j] += go[i + j];
                g.grad_gamma[j] += go[i + j] * xh[i + j];
            }
        return g;
    }

    const double n = static_cast<double>(grad_out.batch() * grad_out.length());
    for (std::size_t i = 0; i < grad_out.size(); i += c)
        for (std::size_t j = 0; j < c; ++j) {
            g.grad_beta[j] += go[i + j];
            g.grad_gamma[j] += go[i + j] * xh[i + j];
        }
    // dx = gamma*inv/N * (N*dy - sum(dy) - xhat*sum(dy*xhat))
    for (std::size_t i = 0; i < grad_out.size(); i += c)
        for (std::size_t j = 0; j < c; ++j) {
            gx[i + j] = s.gamma[j] * cache.inv_std[j] / n *
                        (n * go[i + j] - g.grad_beta[j] - xh[i + j] * g.grad_gamma[j]);
        }
    return g;
}

Tensor3 elu_forward(const Tensor3& x) {
    Tensor3 y(x.shape());
    const double* in = x.data();
    double* out = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : kEluAlpha * std::expm1(in[i]);
    return y;
}

Tensor3 elu_backward(const Tensor3& x, const Tensor3& grad_out) {
    if (x.shape() != grad_out.shape()) throw InvalidInput("elu_backward: shape mismatch");
    Tensor3 g(x.shape());
    const double* in = x.data();
    const double* go = grad_out.data();
    double* out = g.data();
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = in[i] > 0.0 ? go[i] : go[i] * kEluAlpha * std::exp(in[i]);
    return g;
}

std::vector<double> dropout_mask(std::size_t n, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw InvalidInput("dropout: rate must lie in [0, 1)");
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(n);
    for (auto& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
    return mask;
}

Tensor3 dropout_apply_mask(const Tensor3& x, std::span<const double> mask) {
    if (mask.size() != x.size()) throw InvalidInput("dropout: mask size does not match input");
    Tensor3 y(x.shape());
    const double* in = x.data();
    double* out = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = in[i] * mask[i];
    return y;
}

Tensor3 dropout_forward(const Tensor3& x, double rate, Rng& rng, Mode mode, std::vector<double>* mask_out) {
    if (!(rate >= 0.0 && rate < 1.0)) throw InvalidInput("dropout: rate must lie in [0, 1)");
    if (mode == Mode::Infer) {
        if (mask_out) mask_out->assign(x.size(), 1.0);
        return x;
    }
    std::vector<double> mask = dropout_mask(x.size(), rate, rng);
    Tensor3 y = dropout_apply_mask(x, mask);
    if (mask_out) *mask_out = std::move(mask);
    return y;
}

Tensor3 dropout_backward(const Tensor3& grad_out, std::span<const double> mask) {
    return dropout_apply_mask(grad_out, mask);
}

}  // namespace wcae::nn
