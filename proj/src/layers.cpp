#include "wcae/layers.hpp"

#include <algorithm>
#include <sstream>

namespace wcae::nn {
namespace {

std::uint32_t u32(std::size_t v) { return static_cast<std::uint32_t>(v); }

void push_conv(std::vector<ArrayRef>& out, const std::string& prefix, ConvParams& p, ConvGrads& g) {
    out.push_back({prefix + "weights", {u32(p.kernel), u32(p.in_channels), u32(p.out_channels)}, p.weights, g.weights});
    out.push_back({prefix + "bias", {u32(p.out_channels)}, p.bias, g.bias});
}

std::string conv_text(const char* name, const ConvParams& p) {
    std::ostringstream os;
    os << name << "(" << p.out_channels << ", " << p.kernel << ", " << p.stride << ")";
    return os.str();
}

Shape checked_conv_shape(const Shape& in, const ConvParams& p, bool transpose) {
    if (in.channels != p.in_channels) {
        throw InvalidInput("layer expects " + std::to_string(p.in_channels) + " input channels, got " +
                           std::to_string(in.channels));
    }
    if (transpose) return {in.batch, in.length * p.stride, p.out_channels};
    if (in.length % p.stride != 0) throw InvalidInput("length not divisible by stride");
    return {in.batch, in.length / p.stride, p.out_channels};
}

}  // namespace

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::TransposeConv: return "tconv";
        case LayerKind::BatchNorm: return "batchnorm";
        case LayerKind::Elu: return "elu";
        case LayerKind::Dropout: return "dropout";
        case LayerKind::Dwt: return "dwt";
        case LayerKind::Idwt: return "idwt";
    }
    return "unknown";
}

std::size_t Layer::parameter_count() {
    std::size_t n = 0;
    for (const auto& a : arrays())
        if (a.learnable()) n += a.value.size();
    return n;
}

void Layer::zero_grad() {
    for (auto& a : arrays()) std::fill(a.grad.begin(), a.grad.end(), 0.0);
}

// --- Conv -------------------------------------------------------------------

ConvLayer::ConvLayer(ConvParams params) : params_(std::move(params)), grads_(ConvGrads::zeros_like(params_)) {
    params_.validate();
}

Shape ConvLayer::output_shape(const Shape& in) const { return checked_conv_shape(in, params_, false); }

Tensor3 ConvLayer::forward(const Tensor3& x, ForwardContext&) {
    input_ = x;
    return conv1d_forward(x, params_);
}

Tensor3 ConvLayer::backward(const Tensor3& grad_out) {
    Tensor3 gx(input_.shape());
    conv1d_backward_into(input_, params_, grad_out, &gx, grads_);
    return gx;
}

std::vector<ArrayRef> ConvLayer::arrays() {
    std::vector<ArrayRef> out;
    push_conv(out, "", params_, grads_);
    return out;
}

std::string ConvLayer::describe() const { return conv_text("Conv", params_); }

// --- Transpose conv -----------------------------------------------------------

TransposeConvLayer::TransposeConvLayer(ConvParams params)
    : params_(std::move(params)), grads_(ConvGrads::zeros_like(params_)) {
    params_.validate();
}

Shape TransposeConvLayer::output_shape(const Shape& in) const { return checked_conv_shape(in, params_, true); }

Tensor3 TransposeConvLayer::forward(const Tensor3& x, ForwardContext&) {
    input_ = x;
    return transpose_conv1d_forward(x, params_);
}

Tensor3 TransposeConvLayer::backward(const Tensor3& grad_out) {
    Tensor3 gx(input_.shape());
    transpose_conv1d_backward_into(input_, params_, grad_out, &gx, grads_);
    return gx;
}

std::vector<ArrayRef> TransposeConvLayer::arrays() {
    std::vector<ArrayRef> out;
    push_conv(out, "", params_, grads_);
    return out;
}

std::string TransposeConvLayer::describe() const { return conv_text("Deconv", params_); }

// --- Batch norm ------------------------------------------------------------------

BatchNormLayer::BatchNormLayer(std::size_t channels)
    : state_(BatchNormState::identity(channels)), grad_gamma_(channels, 0.0), grad_beta_(channels, 0.0) {}

Tensor3 BatchNormLayer::forward(const Tensor3& x, ForwardContext& ctx) {
    return batchnorm_forward(x, state_, ctx.mode, &cache_);
}

Tensor3 BatchNormLayer::backward(const Tensor3& grad_out) {
    BatchNormGrads g = batchnorm_backward(grad_out, state_, cache_);
    for (std::size_t j = 0; j < grad_gamma_.size(); ++j) {
        grad_gamma_[j] += g.grad_gamma[j];
        grad_beta_[j] += g.grad_beta[j];
    }
    return std::move(g.grad_x);
}

std::vector<ArrayRef> BatchNormLayer::arrays() {
    const std::uint32_t c = u32(state_.gamma.size());
    return {
        {"gamma", {c}, state_.gamma, grad_gamma_},
        {"beta", {c}, state_.beta, grad_beta_},
        {"running_mean", {c}, state_.running_mean, {}},
        {"running_var", {c}, state_.running_var, {}},
    };
}

std::string BatchNormLayer::describe() const {
    return "BatchNorm(" + std::to_string(state_.gamma.size()) + ")";
}

// --- ELU / dropout ------------------------------------------------------------------

Tensor3 EluLayer::forward(const Tensor3& x, ForwardContext&) {
    input_ = x;
    return elu_forward(x);
}

DropoutLayer::DropoutLayer(double rate) : rate_(rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw InvalidInput("dropout: rate must lie in [0, 1)");
}

Tensor3 DropoutLayer::forward(const Tensor3& x, ForwardContext& ctx) {
    if (ctx.mode == Mode::Infer) {
        mask_.assign(x.size(), 1.0);
        return x;
    }
    if (frozen_ && mask_.size() == x.size()) return dropout_apply_mask(x, mask_);
    if (!ctx.rng) throw InvalidInput("dropout: train-mode forward needs a random generator");
    return dropout_forward(x, rate_, *ctx.rng, Mode::Train, &mask_);
}

std::string DropoutLayer::describe() const {
    std::ostringstream os;
    os << "Dropout(" << rate_ << ")";
    return os.str();
}

// --- Wavelet layers ---------------------------------------------------------------

DwtLayer::DwtLayer(WaveletLayerParams params)
    : params_(std::move(params)),
      hp_grads_(ConvGrads::zeros_like(params_.hp_conv)),
      lp_grads_(ConvGrads::zeros_like(params_.lp_conv)) {}

Shape DwtLayer::output_shape(const Shape& in) const {
    if (in.length % 2 != 0) throw InvalidInput("dwt layer: odd input length");
    if (in.channels != params_.hp_conv.in_channels) throw InvalidInput("dwt layer: input channel mismatch");
    return {in.batch, in.length / 2, params_.hp_conv.out_channels + params_.lp_conv.out_channels};
}

Tensor3 DwtLayer::forward(const Tensor3& x, ForwardContext&) {
    input_ = x;
    return dwt_layer_forward(x, params_);
}

Tensor3 DwtLayer::backward(const Tensor3& grad_out) {
    Tensor3 gx(input_.shape());
    dwt_layer_backward_into(input_, params_, grad_out, &gx, hp_grads_, lp_grads_);
    return gx;
}

std::vector<ArrayRef> DwtLayer::arrays() {
    std::vector<ArrayRef> out;
    push_conv(out, "hp_", params_.hp_conv, hp_grads_);
    push_conv(out, "lp_", params_.lp_conv, lp_grads_);
    return out;
}

std::string DwtLayer::describe() const {
    return "DWT[HPF " + conv_text("Conv", params_.hp_conv) + ", LPF " + conv_text("Conv", params_.lp_conv) + "]";
}

IdwtLayer::IdwtLayer(WaveletLayerParams params)
    : params_(std::move(params)),
      hp_grads_(ConvGrads::zeros_like(params_.hp_conv)),
      lp_grads_(ConvGrads::zeros_like(params_.lp_conv)) {}

Shape IdwtLayer::output_shape(const Shape& in) const {
    const std::size_t expected =
        params_.branch_input == BranchInput::Shared ? params_.hp_conv.in_channels : 2 * params_.hp_conv.in_channels;
    if (in.channels != expected) throw InvalidInput("idwt layer: input channel mismatch");
    return {in.batch, in.length * 2, params_.hp_conv.out_channels};
}

Tensor3 IdwtLayer::forward(const Tensor3& x, ForwardContext&) {
    input_ = x;
    return idwt_layer_forward(x, params_);
}

Tensor3 IdwtLayer::backward(const Tensor3& grad_out) {
    Tensor3 gx(input_.shape());
    idwt_layer_backward_into(input_, params_, grad_out, &gx, hp_grads_, lp_grads_);
    return gx;
}

std::vector<ArrayRef> IdwtLayer::arrays() {
    std::vector<ArrayRef> out;
    push_conv(out, "hp_", params_.hp_conv, hp_grads_);
    push_conv(out, "lp_", params_.lp_conv, lp_grads_);
    return out;
}

std::string IdwtLayer::describe() const {
    const char* mode = params_.branch_input == BranchInput::Shared ? "shared" : "split";
    return std::string("IDWT[") + mode + ", HPF " + conv_text("Deconv", params_.hp_conv) + ", LPF " +
           conv_text("Deconv", params_.lp_conv) + "]";
}

}  // namespace wcae::nn
