#pragma once

// Direct-summation references for strided convolution and its transpose.
// Test-only; written independently of the Eigen-backed kernels.

#include <algorithm>
#include <cstddef>
#include <functional>

#include "wcae/nn.hpp"

namespace oracle {

inline std::ptrdiff_t same_pad_left(std::size_t long_len, std::size_t kernel, std::size_t stride) {
    const std::ptrdiff_t out = static_cast<std::ptrdiff_t>(long_len / stride);
    const std::ptrdiff_t total = std::max<std::ptrdiff_t>(
        (out - 1) * static_cast<std::ptrdiff_t>(stride) + static_cast<std::ptrdiff_t>(kernel) -
            static_cast<std::ptrdiff_t>(long_len),
        0);
    return total / 2;
}

inline wcae::Tensor3 conv(const wcae::Tensor3& x, const wcae::nn::ConvParams& p) {
    const std::size_t out_len = x.length() / p.stride;
    const std::ptrdiff_t pl = same_pad_left(x.length(), p.kernel, p.stride);
    wcae::Tensor3 y(x.batch(), out_len, p.out_channels);
    for (std::size_t b = 0; b < x.batch(); ++b)
        for (std::size_t t = 0; t < out_len; ++t)
            for (std::size_t co = 0; co < p.out_channels; ++co) {
                double acc = p.bias[co];
                for (std::size_t k = 0; k < p.kernel; ++k) {
                    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * p.stride + k) - pl;
                    if (src < 0 || src >= static_cast<std::ptrdiff_t>(x.length())) continue;
                    for (std::size_t ci = 0; ci < p.in_channels; ++ci)
                        acc += x(b, static_cast<std::size_t>(src), ci) * p.w(k, ci, co);
                }
                y(b, t, co) = acc;
            }
    return y;
}

// Every input sample scatters kernel * out_channels contributions.
inline wcae::Tensor3 transpose_conv(const wcae::Tensor3& x, const wcae::nn::ConvParams& p) {
    const std::size_t out_len = x.length() * p.stride;
    const std::ptrdiff_t pl = same_pad_left(out_len, p.kernel, p.stride);
    wcae::Tensor3 y(x.batch(), out_len, p.out_channels);
    for (std::size_t b = 0; b < x.batch(); ++b) {
        for (std::size_t t = 0; t < out_len; ++t)
            for (std::size_t co = 0; co < p.out_channels; ++co) y(b, t, co) = p.bias[co];
        for (std::size_t t = 0; t < x.length(); ++t)
            for (std::size_t k = 0; k < p.kernel; ++k) {
                const std::ptrdiff_t dst = static_cast<std::ptrdiff_t>(t * p.stride + k) - pl;
                if (dst < 0 || dst >= static_cast<std::ptrdiff_t>(out_len)) continue;
                for (std::size_t ci = 0; ci < p.in_channels; ++ci)
                    for (std::size_t co = 0; co < p.out_channels; ++co)
                        y(b, static_cast<std::size_t>(dst), co) += x(b, t, ci) * p.w(k, ci, co);
            }
    }
    return y;
}

/// Central difference of f at values[i].
inline double central_difference(std::span<double> values, std::size_t i, double h, const std::function<double()>& f) {
    const double orig = values[i];
    values[i] = orig + h;
    const double plus = f();
    values[i] = orig - h;
    const double minus = f();
    values[i] = orig;
    return (plus - minus) / (2.0 * h);
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

}  // namespace oracle
