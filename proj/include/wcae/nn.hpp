#pragma once

// Differentiable operators over Tensor3. Each forward has a matching
// backward that returns the input gradient and parameter gradients.
//
// Padding is "same" style: the total padding is (out-1)*stride + kernel - in
// with the smaller half on the left, so the output length is in/stride for
// convolution and in*stride for transpose convolution.

#include <cstdint>
#include <span>
#include <vector>

#include "wcae/rng.hpp"
#include "wcae/tensor.hpp"
#include "wcae/wavelet.hpp"

namespace wcae::nn {

enum class Mode { Train, Infer };

struct Padding {
    std::size_t left = 0;
    std::size_t right = 0;
};

/// Padding for a stride-s window over a long_length input producing long_length/s outputs.
Padding same_padding(std::size_t long_length, std::size_t kernel, std::size_t stride);

/// Convolution weights, laid out (kernel, in_channels, out_channels).
/// For transpose convolution, in/out refer to the transpose layer's own
/// input and output channels.
struct ConvParams {
    std::size_t kernel = 1;
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t stride = 1;
    std::vector<double> weights;
    std::vector<double> bias;

    static ConvParams zeros(std::size_t kernel, std::size_t in_channels, std::size_t out_channels,
                            std::size_t stride);

    double& w(std::size_t k, std::size_t ci, std::size_t co) {
        return weights[(k * in_channels + ci) * out_channels + co];
    }
    double w(std::size_t k, std::size_t ci, std::size_t co) const {
        return weights[(k * in_channels + ci) * out_channels + co];
    }
    std::size_t parameter_count() const { return weights.size() + bias.size(); }

    /// Throws InvalidInput unless kernel >= stride >= 1 and arrays are sized.
    void validate() const;
};

struct ConvGrads {
    std::vector<double> weights;
    std::vector<double> bias;

    static ConvGrads zeros_like(const ConvParams& p) {
        return {std::vector<double>(p.weights.size(), 0.0), std::vector<double>(p.bias.size(), 0.0)};
    }
};

struct ConvBackward {
    Tensor3 grad_x;
    ConvGrads grad_p;
};

Tensor3 conv1d_forward(const Tensor3& x, const ConvParams& p);
ConvBackward conv1d_backward(const Tensor3& x, const ConvParams& p, const Tensor3& grad_out);
/// Accumulating form: adds parameter gradients into acc and writes grad_x if non-null.
void conv1d_backward_into(const Tensor3& x, const ConvParams& p, const Tensor3& grad_out, Tensor3* grad_x,
                          ConvGrads& acc);

/// Adjoint of conv1d_forward's linear part; output length = x.length * stride.
Tensor3 transpose_conv1d_forward(const Tensor3& x, const ConvParams& p);
ConvBackward transpose_conv1d_backward(const Tensor3& x, const ConvParams& p, const Tensor3& grad_out);
void transpose_conv1d_backward_into(const Tensor3& x, const ConvParams& p, const Tensor3& grad_out,
                                    Tensor3* grad_x, ConvGrads& acc);

// ---------------------------------------------------------------------------
// Batch normalization (per channel, statistics over batch x length).

struct BatchNormState {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.99;
    double epsilon = 1e-3;

    static BatchNormState identity(std::size_t channels);
};

struct BatchNormCache {
    Mode mode = Mode::Infer;
    std::vector<double> inv_std;
    Tensor3 xhat;
};

/// Train mode normalizes with batch statistics (biased variance) and
/// updates running_mean/var as running = momentum*running + (1-momentum)*batch.
Tensor3 batchnorm_forward(const Tensor3& x, BatchNormState& state, Mode mode, BatchNormCache* cache = nullptr);
/// Infer-mode forward with no side effects.
Tensor3 batchnorm_infer(const Tensor3& x, const BatchNormState& state);

struct BatchNormGrads {
    Tensor3 grad_x;
    std::vector<double> grad_gamma;
    std::vector<double> grad_beta;
};
BatchNormGrads batchnorm_backward(const Tensor3& grad_out, const BatchNormState& state,
                                  const BatchNormCache& cache);

// ---------------------------------------------------------------------------
// ELU (alpha = 1) and inverted dropout.

inline constexpr double kEluAlpha = 1.0;

Tensor3 elu_forward(const Tensor3& x);
Tensor3 elu_backward(const Tensor3& x, const Tensor3& grad_out);

/// Draws a keep mask (values 0 or 1/(1-rate)) for n elements.
std::vector<double> dropout_mask(std::size_t n, double rate, Rng& rng);
/// Train: multiply by a freshly drawn mask (returned through mask_out if given).
/// Infer: identity.
Tensor3 dropout_forward(const Tensor3& x, double rate, Rng& rng, Mode mode,
                        std::vector<double>* mask_out = nullptr);
Tensor3 dropout_apply_mask(const Tensor3& x, std::span<const double> mask);
Tensor3 dropout_backward(const Tensor3& grad_out, std::span<const double> mask);

// ---------------------------------------------------------------------------
// Wavelet layers.

/// How an IDWT layer feeds its two branches.
enum class BranchInput : std::uint32_t {
    Split = 0,   ///< first half of the channels -> detail branch, second half -> approx branch
    Shared = 1,  ///< every channel feeds both branches (used when the input has one channel)
};

struct WaveletLayerParams {
    ConvParams hp_conv;  ///< acts on the detail (high-pass) branch
    ConvParams lp_conv;  ///< acts on the approximation (low-pass) branch
    wavelet::FilterBank bank = wavelet::db6();
    BranchInput branch_input = BranchInput::Split;

    std::size_t parameter_count() const { return hp_conv.parameter_count() + lp_conv.parameter_count(); }
};

struct WaveletLayerGrads {
    Tensor3 grad_x;
    ConvGrads hp;
    ConvGrads lp;
};

/// Per-channel DWT along length, then hp_conv on the detail branch and
/// lp_conv on the approximation branch, concatenated as [detail | approx].
/// (B, L, C) -> (B, L/2, hp.out + lp.out).
Tensor3 dwt_layer_forward(const Tensor3& x, const WaveletLayerParams& p);
WaveletLayerGrads dwt_layer_backward(const Tensor3& x, const WaveletLayerParams& p, const Tensor3& grad_out);
void dwt_layer_backward_into(const Tensor3& x, const WaveletLayerParams& p, const Tensor3& grad_out,
                             Tensor3* grad_x, ConvGrads& hp_acc, ConvGrads& lp_acc);

/// Transpose-convolves the detail and approximation inputs (per BranchInput)
/// and applies the per-channel inverse DWT. (B, L, C) -> (B, 2L, out).
Tensor3 idwt_layer_forward(const Tensor3& x, const WaveletLayerParams& p);
WaveletLayerGrads idwt_layer_backward(const Tensor3& x, const WaveletLayerParams& p, const Tensor3& grad_out);
void idwt_layer_backward_into(const Tensor3& x, const WaveletLayerParams& p, const Tensor3& grad_out,
                              Tensor3* grad_x, ConvGrads& hp_acc, ConvGrads& lp_acc);

/// Channel-wise DWT of a tensor: returns {approx, detail}, each (B, L/2, C).
std::pair<Tensor3, Tensor3> tensor_dwt(const Tensor3& x, const wavelet::FilterBank& bank);
/// Channel-wise inverse of tensor_dwt.
Tensor3 tensor_idwt(const Tensor3& approx, const Tensor3& detail, const wavelet::FilterBank& bank);

}  // namespace wcae::nn
