#include <Eigen/Core>

#include "wcae/nn.hpp"

namespace wcae::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Strided = Eigen::OuterStride<>;
using ConstView = Eigen::Map<const RowMat, 0, Strided>;
using View = Eigen::Map<RowMat, 0, Strided>;

// For kernel tap k, the short-side positions j in [lo, hi) whose long-side
// partner i = j*stride + k - pad_left falls inside [0, long_length).
struct TapRange {
    std::size_t lo = 0;
    std::size_t hi = 0;
    std::size_t long_start = 0;
    std::size_t count() const { return hi > lo ? hi - lo : 0; }
};

TapRange tap_range(std::size_t k, std::size_t pad_left, std::size_t stride, std::size_t long_length,
                   std::size_t short_length) {
    const auto kk = static_cast<std::ptrdiff_t>(k);
    const auto pl = static_cast<std::ptrdiff_t>(pad_left);
    const auto s = static_cast<std::ptrdiff_t>(stride);
    const auto n_long = static_cast<std::ptrdiff_t>(long_length);
    std::ptrdiff_t lo = 0;
    if (pl > kk) lo = (pl - kk + s - 1) / s;
    std::ptrdiff_t hi = (n_long - 1 - kk + pl) / s + 1;
    if (n_long - 1 - kk + pl < 0) hi = 0;
    hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(short_length));
    TapRange r;
    if (hi <= lo) return r;
    r.lo = static_cast<std::size_t>(lo);
    r.hi = static_cast<std::size_t>(hi);
    r.long_start = static_cast<std::size_t>(lo * s + kk - pl);
    return r;
}

// Rows of the long-side matrix touched by tap k: every stride-th row from long_start.
ConstView long_rows(const double* base, const TapRange& r, std::size_t stride, std::size_t cols) {
    return ConstView(base + r.long_start * cols, static_cast<Eigen::Index>(r.count()),
                     static_cast<Eigen::Index>(cols), Strided(static_cast<Eigen::Index>(stride * cols)));
}

View long_rows(double* base, const TapRange& r, std::size_t stride, std::size_t cols) {
    return View(base + r.long_start * cols, static_cast<Eigen::Index>(r.count()), static_cast<Eigen::Index>(cols),
                Strided(static_cast<Eigen::Index>(stride * cols)));
}

ConstView short_rows(const double* base, const TapRange& r, std::size_t cols) {
    return ConstView(base + r.lo * cols, static_cast<Eigen::Index>(r.count()), static_cast<Eigen::Index>(cols),
                     Strided(static_cast<Eigen::Index>(cols)));
}

View short_rows(double* base, const TapRange& r, std::size_t cols) {
    return View(base + r.lo * cols, static_cast<Eigen::Index>(r.count()), static_cast<Eigen::Index>(cols),
                Strided(static_cast<Eigen::Index>(cols)));
}

ConstView tap_weights(const ConvParams& p, std::size_t k) {
    return ConstView(p.weights.data() + k * p.in_channels * p.out_channels, static_cast<Eigen::Index>(p.in_channels),
                     static_cast<Eigen::Index>(p.out_channels), Strided(static_cast<Eigen::Index>(p.out_channels)));
}

View tap_weights(std::vector<double>& w, const ConvParams& p, std::size_t k) {
    return View(w.data() + k * p.in_channels * p.out_channels, static_cast<Eigen::Index>(p.in_channels),
                static_cast<Eigen::Index>(p.out_channels), Strided(static_cast<Eigen::Index>(p.out_channels)));
}

void check_input(const Tensor3& x, const ConvParams& p, const char* op) {
    p.validate();
    if (x.channels() != p.in_channels) {
        throw InvalidInput(std::string(op) + ": input has " + std::to_string(x.channels()) +
                           " channels, parameters expect " + std::to_string(p.in_channels));
    }
}

void add_bias(Tensor3& y, const std::vector<double>& bias) {
    const std::size_t c = y.channels();
    double* d = y.data();
    for (std::size_t i = 0; i < y.size(); i += c)
        for (std::size_t j = 0; j < c; ++j) d[i + j] = bias[j];
}

void accumulate_bias_grad(const Tensor3& g, std::vector<double>& acc) {
    const std::size_t c = g.channels();
    const double* d = g.data();
    for (std::size_t i = 0; i < g.size(); i += c)
        for (std::size_t j = 0; j < c; ++j) acc[j] += d[i + j];
}

}  // namespace

Padding same_padding(std::size_t long_length, std::size_t kernel, std::size_t stride) {
    const std::size_t out = long_length / stride;
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>((out - 1) * stride + kernel) -
                                 static_cast<std::ptrdiff_t>(long_length);
    const std::size_t t = total > 0 ? static_cast<std::size_t>(total) : 0;
    return {t / 2, t - t / 2};
}

ConvParams ConvParams::zeros(std::size_t kernel, std::size_t in_channels, std::size_t out_channels,
                             std::size_t stride) {
    ConvParams p;
    p.kernel = kernel;
    p.in_channels = in_channels;
    p.out_channels = out_channels;
    p.stride = stride;
    p.weights.assign(kernel * in_channels * out_channels, 0.0);
    p.bias.assign(out_channels, 0.0);
    return p;
}

void ConvParams::validate() const {
    if (stride < 1 || kernel < stride) {
        throw InvalidInput("ConvParams: require kernel >= stride >= 1 (kernel " + std::to_string(kernel) +
                           ", stride " + std::to_string(stride) + ")");
    }
    if (in_channels < 1 || out_channels < 1 || weights.size() != kernel * in_channels * out_channels ||
        bias.size() != out_channels) {
        throw InvalidInput("ConvParams: weight or bias array has the wrong size");
    }
}

Tensor3 conv1d_forward(const Tensor3& x, const ConvParams& p) {
    check_input(x, p, "conv1d_forward");
    if (x.length() % p.stride != 0) {
        throw InvalidInput("conv1d_forward: length " + std::to_string(x.length()) + " not divisible by stride " +
                           std::to_string(p.stride));
    }
    const std::size_t out_len = x.length() / p.stride;
    Tensor3 y(x.batch(), out_len, p.out_channels);
    add_bias(y, p.bias);
    const Padding pad = same_padding(x.length(), p.kernel, p.stride);
    for (std::size_t k = 0; k < p.kernel; ++k) {
        const TapRange r = tap_range(k, pad.left, p.stride, x.length(), out_len);
        if (r.count() == 0) continue;
        const ConstView w = tap_weights(p, k);
        for (std::size_t b = 0; b < x.batch(); ++b) {
            short_rows(y.item(b), r, p.out_channels).noalias() +=
                long_rows(x.item(b), r, p.stride, p.in_channels) * w;
        }
    }
    return y;
}

void conv1d_backward_into(const Tensor3& x, const ConvParams& p, const Tensor3& grad_out, Tensor3* grad_x,
                          ConvGrads& acc) {
    check_input(x, p, "conv1d_backward");
    const std::size_t out_len = x.length() / p.stride;
    if (grad_out.shape() != Shape{x.batch(), out_len, p.out_channels}) {
        throw InvalidInput("conv1d_backward: grad_out shape " + grad_out.shape().str() + " does not match forward");
    }
    if (grad_x && grad_x->shape() != x.shape()) throw InvalidInput("conv1d_backward: grad_x shape mismatch");
    accumulate_bias_grad(grad_out, acc.bias);
    const Padding pad = same_padding(x.length(), p.kernel, p.stride);
    for (std::size_t k = 0; k < p.kernel; ++k) {
        const TapRange r = tap_range(k, pad.left, p.stride, x.length(), out_len);
        if (r.count() == 0) continue;
        const ConstView w = tap_weights(p, k);
        View gw = tap_weights(acc.weights, p, k);
        for (std::size_t b = 0; b < x.batch(); ++b) {
            const ConstView g = short_rows(grad_out.item(b), r, p.out_channels);
            gw.noalias() += long_rows(x.item(b), r, p.stride, p.in_channels).transpose() * g;
            if (grad_x) long_rows(grad_x->item(b), r, p.stride, p.in_channels).noalias() += g * w.transpose();
        }
    }
}

ConvBackward conv1d_backward(const Tensor3& x, const ConvParams& p, const Tensor3& grad_out) {
    ConvBackward out{Tensor3(x.shape()), ConvGrads::zeros_like(p)};
    conv1d_backward_into(x, p, grad_out, &out.grad_x, out.grad_p);
    return out;
}

Tensor3 transpose_conv1d_forward(const Tensor3& x, const ConvParams& p) {
    check_input(x, p, "transpose_conv1d_forward");
    const std::size_t out_len = x.length() * p.stride;
    Tensor3 y(x.batch(), out_len, p.out_channels);
    add_bias(y, p.bias);
    const Padding pad = same_padding(out_len, p.kernel, p.stride);
    for (std::size_t k = 0; k < p.kernel; ++k) {
        const TapRange r = tap_range(k, pad.left, p.stride, out_len, x.length());
        if (r.count() == 0) continue;
        const ConstView w = tap_weights(p, k);
        for (std::size_t b = 0; b < x.batch(); ++b) {
            long_rows(y.item(b), r, p.stride, p.out_channels).noalias() += short_rows(x.item(b), r, p.in_channels) * w;
        }
    }
    return y;
}

void transpose_conv1d_backward_into(const Tensor3& x, const ConvParams& p, const Tensor3& grad_out,
                                    Tensor3* grad_x, ConvGrads& acc) {
    check_input(x, p, "transpose_conv1d_backward");
    const std::size_t out_len = x.length() * p.stride;
    if (grad_out.shape() != Shape{x.batch(), out_len, p.out_channels}) {
        throw InvalidInput("transpose_conv1d_backward: grad_out shape " + grad_out.shape().str() +
                           " does not match forward");
    }
    if (grad_x && grad_x->shape() != x.shape()) throw InvalidInput("transpose_conv1d_backward: grad_x shape mismatch");
    accumulate_bias_grad(grad_out, acc.bias);
    const Padding pad = same_padding(out_len, p.kernel, p.stride);
    for (std::size_t k = 0; k < p.kernel; ++k) {
        const TapRange r = tap_range(k, pad.left, p.stride, out_len, x.length());
        if (r.count() == 0) continue;
        const ConstView w = tap_weights(p, k);
        View gw = tap_weights(acc.weights, p, k);
        for (std::size_t b = 0; b < x.batch(); ++b) {
            const ConstView g = long_rows(grad_out.item(b), r, p.stride, p.out_channels);
            gw.noalias() += short_rows(x.item(b), r, p.in_channels).transpose() * g;
            if (grad_x) short_rows(grad_x->item(b), r, p.in_channels).noalias() += g * w.transpose();
        }
    }
}

ConvBackward transpose_conv1d_backward(const Tensor3& x, const ConvParams& p, const Tensor3& grad_out) {
    ConvBackward out{Tensor3(x.shape()), ConvGrads::zeros_like(p)};
    transpose_conv1d_backward_into(x, p, grad_out, &out.grad_x, out.grad_p);
    return out;
}

}  // namespace wcae::nn
