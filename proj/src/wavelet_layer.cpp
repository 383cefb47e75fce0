#include <string>

#include "wcae/nn.hpp"

namespace wcae::nn {
namespace {

// Copies channels [first, first + count) of x into a new tensor.
Tensor3 slice_channels(const Tensor3& x, std::size_t first, std::size_t count) {
    Tensor3 out(x.batch(), x.length(), count);
    for (std::size_t b = 0; b < x.batch(); ++b)
        for (std::size_t t = 0; t < x.length(); ++t)
            for (std::size_t c = 0; c < count; ++c) out(b, t, c) = x(b, t, first + c);
    return out;
}

void add_into_channels(Tensor3& dst, const Tensor3& src, std::size_t first) {
    for (std::size_t b = 0; b < src.batch(); ++b)
        for (std::size_t t = 0; t < src.length(); ++t)
            for (std::size_t c = 0; c < src.channels(); ++c) dst(b, t, first + c) += src(b, t, c);
}

Tensor3 concat_channels(const Tensor3& a, const Tensor3& b) {
    Tensor3 out(a.batch(), a.length(), a.channels() + b.channels());
    add_into_channels(out, a, 0);
    add_into_channels(out, b, a.channels());
    return out;
}

void check_branches(const WaveletLayerParams& p, const char* op) {
    p.hp_conv.validate();
    p.lp_conv.validate();
    if (p.hp_conv.stride != 1 || p.lp_conv.stride != 1) {
        throw InvalidInput(std::string(op) + ": branch convolutions must have stride 1");
    }
    if (p.hp_conv.kernel != p.lp_conv.kernel || p.hp_conv.out_channels != p.lp_conv.out_channels ||
        p.hp_conv.in_channels != p.lp_conv.in_channels) {
        throw InvalidInput(std::string(op) + ": high-pass and low-pass branches must have identical shapes");
    }
}

}  // namespace

std::pair<Tensor3, Tensor3> tensor_dwt(const Tensor3& x, const wavelet::FilterBank& bank) {
    if (x.length() % 2 != 0) {
        throw InvalidInput("dwt: length " + std::to_string(x.length()) + " is odd");
    }
    const std::size_t half = x.length() / 2;
    const std::size_t c = x.channels();
    Tensor3 approx(x.batch(), half, c);
    Tensor3 detail(x.batch(), half, c);
    for (std::size_t b = 0; b < x.batch(); ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            wavelet::dwt_step_into(x.item(b) + ch, x.length(), c, bank, approx.item(b) + ch, detail.item(b) + ch, c);
    return {std::move(approx), std::move(detail)};
}

Tensor3 tensor_idwt(const Tensor3& approx, const Tensor3& detail, const wavelet::FilterBank& bank) {
    if (approx.shape() != detail.shape()) throw InvalidInput("idwt: approx and detail shapes differ");
    const std::size_t c = approx.channels();
    Tensor3 out(approx.batch(), approx.length() * 2, c);
    for (std::size_t b = 0; b < approx.batch(); ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            wavelet::idwt_step_into(approx.item(b) + ch, detail.item(b) + ch, approx.length(), c, bank,
                                    out.item(b) + ch, c);
    return out;
}

Tensor3 dwt_layer_forward(const Tensor3& x, const WaveletLayerParams& p) {
    check_branches(p, "dwt_layer_forward");
    auto [approx, detail] = tensor_dwt(x, p.bank);
    return concat_channels(conv1d_forward(detail, p.hp_conv), conv1d_forward(approx, p.lp_conv));
}

void dwt_layer_backward_into(const Tensor3& x, const WaveletLayerParams& p, const Tensor3& grad_out,
                             Tensor3* grad_x, ConvGrads& hp_acc, ConvGrads& lp_acc) {
    check_branches(p, "dwt_layer_backward");
    const std::size_t half_out = p.hp_conv.out_channels;
    if (grad_out.shape() != Shape{x.batch(), x.length() / 2, 2 * half_out}) {
        throw InvalidInput("dwt_layer_backward: grad_out shape " + grad_out.shape().str() + " does not match forward");
    }
    auto [approx, detail] = tensor_dwt(x, p.bank);
    const Tensor3 g_hp = slice_channels(grad_out, 0, half_out);
    const Tensor3 g_lp = slice_channels(grad_out, half_out, half_out);
    Tensor3 g_detail(detail.shape());
    Tensor3 g_approx(approx.shape());
    conv1d_backward_into(detail, p.hp_conv, g_hp, grad_x ? &g_detail : nullptr, hp_acc);
    conv1d_backward_into(approx, p.lp_conv, g_lp, grad_x ? &g_approx : nullptr, lp_acc);
    // The orthogonal analysis operator's adjoint is the synthesis operator.
    if (grad_x) *grad_x = tensor_idwt(g_approx, g_detail, p.bank);
}

WaveletLayerGrads dwt_layer_backward(const Tensor3& x, const WaveletLayerParams& p, const Tensor3& grad_out) {
    WaveletLayerGrads g{Tensor3(x.shape()), ConvGrads::zeros_like(p.hp_conv), ConvGrads::zeros_like(p.lp_conv)};
    dwt_layer_backward_into(x, p, grad_out, &g.grad_x, g.hp, g.lp);
    return g;
}

namespace {

std::pair<Tensor3, Tensor3> idwt_branch_inputs(const Tensor3& x, const WaveletLayerParams& p) {
    if (p.branch_input == BranchInput::Shared) {
        if (x.channels() != p.hp_conv.in_channels) {
            throw InvalidInput("idwt_layer: input has " + std::to_string(x.channels()) +
                               " channels, branches expect " + std::to_string(p.hp_conv.in_channels));
        }
        return {x, x};
    }
    if (x.channels() % 2 != 0) {
        throw InvalidInput("idwt_layer: split branch input needs an even channel count, got " +
                           std::to_string(x.channels()));
    }
    const std::size_t half = x.channels() / 2;
    if (half != p.hp_conv.in_channels) {
        throw InvalidInput("idwt_layer: half of the input channels (" + std::to_string(half) +
                           ") must equal the branch input channels (" + std::to_string(p.hp_conv.in_channels) + ")");
    }
    return {slice_channels(x, 0, half), slice_channels(x, half, half)};
}

}  // namespace

Tensor3 idwt_layer_forward(const Tensor3& x, const WaveletLayerParams& p) {
    check_branches(p, "idwt_layer_forward");
    auto [x_detail, x_approx] = idwt_branch_inputs(x, p);
    const Tensor3 detail = transpose_conv1d_forward(x_detail, p.hp_conv);
    const Tensor3 approx = transpose_conv1d_forward(x_approx, p.lp_conv);
    return tensor_idwt(approx, detail, p.bank);
}

void idwt_layer_backward_into(const Tensor3& x, const WaveletLayerParams& p, const Tensor3& grad_out,
                              Tensor3* grad_x, ConvGrads& hp_acc, ConvGrads& lp_acc) {
    check_branches(p, "idwt_layer_backward");
    if (grad_out.shape() != Shape{x.batch(), 2 * x.length(), p.hp_conv.out_channels}) {
        throw InvalidInput("idwt_layer_backward: grad_out shape " + grad_out.shape().str() +
                           " does not match forward");
    }
    auto [x_detail, x_approx] = idwt_branch_inputs(x, p);
    // Adjoint of synthesis is analysis.
    auto [g_approx, g_detail] = tensor_dwt(grad_out, p.bank);
    Tensor3 gx_detail(x_detail.shape());
    Tensor3 gx_approx(x_approx.shape());
    transpose_conv1d_backward_into(x_detail, p.hp_conv, g_detail, grad_x ? &gx_detail : nullptr, hp_acc);
    transpose_conv1d_backward_into(x_approx, p.lp_conv, g_approx, grad_x ? &gx_approx : nullptr, lp_acc);
    if (!grad_x) return;
    if (p.branch_input == BranchInput::Shared) {
        Tensor3 sum = std::move(gx_detail);
        for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] += gx_approx.data()[i];
        *grad_x = std::move(sum);
    } else {
        *grad_x = concat_channels(gx_detail, gx_approx);
    }
}

WaveletLayerGrads idwt_layer_backward(const Tensor3& x, const WaveletLayerParams& p, const Tensor3& grad_out) {
    WaveletLayerGrads g{Tensor3(x.shape()), ConvGrads::zeros_like(p.hp_conv), ConvGrads::zeros_like(p.lp_conv)};
    idwt_layer_backward_into(x, p, grad_out, &g.grad_x, g.hp, g.lp);
    return g;
}

}  // namespace wcae::nn
