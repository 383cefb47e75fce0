#include <algorithm>
#include <cmath>

#include "wcae/layers.hpp"

namespace wcae::nn {
namespace {

double probe(Layer& layer, const Tensor3& x, const std::vector<double>& weights, Mode mode) {
    ForwardContext ctx{mode, nullptr};
    const Tensor3 y = layer.forward(x, ctx);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += weights[i] * y.data()[i];
    return acc;
}

}  // namespace

double gradient_check(Layer& layer, const Tensor3& input, double h, std::uint64_t seed, Mode mode) {
    Rng rng(seed);
    const Shape out_shape = layer.output_shape(input.shape());
    std::vector<double> r(out_shape.size());
    for (auto& v : r) v = rng.uniform(-1.0, 1.0);

    // Batch-norm running statistics move on every train-mode call; restore
    // them afterwards so the check leaves the layer untouched.
    std::vector<std::vector<double>> saved;
    for (auto& a : layer.arrays()) saved.emplace_back(a.value.begin(), a.value.end());

    layer.zero_grad();
    ForwardContext ctx{mode, nullptr};
    const Tensor3 y = layer.forward(input, ctx);
    Tensor3 grad_out(y.shape());
    std::copy(r.begin(), r.end(), grad_out.data());
    const Tensor3 grad_x = layer.backward(grad_out);

    double worst = 0.0;
    auto compare = [&](double analytic, double numeric) {
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    };

    Tensor3 x = input;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x.data()[i];
        x.data()[i] = orig + h;
        const double plus = probe(layer, x, r, mode);
        x.data()[i] = orig - h;
        const double minus = probe(layer, x, r, mode);
        x.data()[i] = orig;
        compare(grad_x.data()[i], (plus - minus) / (2.0 * h));
    }

    auto arrays = layer.arrays();
    for (auto& a : arrays) {
        if (!a.learnable()) continue;
        const std::vector<double> analytic(a.grad.begin(), a.grad.end());
        for (std::size_t i = 0; i < a.value.size(); ++i) {
            const double orig = a.value[i];
            a.value[i] = orig + h;
            const double plus = probe(layer, input, r, mode);
            a.value[i] = orig - h;
            const double minus = probe(layer, input, r, mode);
            a.value[i] = orig;
            compare(analytic[i], (plus - minus) / (2.0 * h));
        }
    }

    std::size_t idx = 0;
    for (auto& a : layer.arrays()) {
        std::copy(saved[idx].begin(), saved[idx].end(), a.value.begin());
        ++idx;
    }
    return worst;
}

}  // namespace wcae::nn
