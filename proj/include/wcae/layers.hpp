#pragma once

// Stateful layer objects for the sequential network. forward() caches
// what backward() needs; infer() is const and side-effect free so a
// frozen network can be shared across threads.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wcae/nn.hpp"
#include "wcae/rng.hpp"
#include "wcae/tensor.hpp"

namespace wcae::nn {

/// Stable tags; they are written into checkpoints.
enum class LayerKind : std::uint32_t {
    Conv = 1,
    TransposeConv = 2,
    BatchNorm = 3,
    Elu = 4,
    Dropout = 5,
    Dwt = 6,
    Idwt = 7,
};

const char* to_string(LayerKind kind);

/// A named parameter or state array. grad is empty for non-learnable state
/// (batch-norm running statistics).
struct ArrayRef {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::span<double> value;
    std::span<double> grad;

    bool learnable() const { return !grad.empty(); }
};

struct ForwardContext {
    Mode mode = Mode::Train;
    Rng* rng = nullptr;  ///< required by dropout in train mode
};

class Layer {
public:
    virtual ~Layer() = default;

    virtual LayerKind kind() const = 0;
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual Tensor3 infer(const Tensor3& x) const = 0;
    virtual Tensor3 forward(const Tensor3& x, ForwardContext& ctx) = 0;
    /// Accumulates parameter gradients and returns the input gradient.
    virtual Tensor3 backward(const Tensor3& grad_out) = 0;

    /// All persisted arrays in checkpoint order.
    virtual std::vector<ArrayRef> arrays() { return {}; }
    virtual std::unique_ptr<Layer> clone() const = 0;
    virtual std::string describe() const = 0;

    std::size_t parameter_count();
    void zero_grad();
};

class ConvLayer final : public Layer {
public:
    explicit ConvLayer(ConvParams params);
    LayerKind kind() const override { return LayerKind::Conv; }
    Shape output_shape(const Shape& in) const override;
    Tensor3 infer(const Tensor3& x) const override { return conv1d_forward(x, params_); }
    Tensor3 forward(const Tensor3& x, ForwardContext& ctx) override;
    Tensor3 backward(const Tensor3& grad_out) override;
    std::vector<ArrayRef> arrays() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<ConvLayer>(*this); }
    std::string describe() const override;

    ConvParams& params() { return params_; }
    const ConvParams& params() const { return params_; }
    const ConvGrads& grads() const { return grads_; }

private:
    ConvParams params_;
    ConvGrads grads_;
    Tensor3 input_;
};

class TransposeConvLayer final : public Layer {
public:
    explicit TransposeConvLayer(ConvParams params);
    LayerKind kind() const override { return LayerKind::TransposeConv; }
    Shape output_shape(const Shape& in) const override;
    Tensor3 infer(const Tensor3& x) const override { return transpose_conv1d_forward(x, params_); }
    Tensor3 forward(const Tensor3& x, ForwardContext& ctx) override;
    Tensor3 backward(const Tensor3& grad_out) override;
    std::vector<ArrayRef> arrays() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<TransposeConvLayer>(*this); }
    std::string describe() const override;

    ConvParams& params() { return params_; }
    const ConvParams& params() const { return params_; }

private:
    ConvParams params_;
    ConvGrads grads_;
    Tensor3 input_;
};

class BatchNormLayer final : public Layer {
public:
    explicit BatchNormLayer(std::size_t channels);
    LayerKind kind() const override { return LayerKind::BatchNorm; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor3 infer(const Tensor3& x) const override { return batchnorm_infer(x, state_); }
    Tensor3 forward(const Tensor3& x, ForwardContext& ctx) override;
    Tensor3 backward(const Tensor3& grad_out) override;
    std::vector<ArrayRef> arrays() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNormLayer>(*this); }
    std::string describe() const override;

    BatchNormState& state() { return state_; }
    const BatchNormState& state() const { return state_; }

private:
    BatchNormState state_;
    std::vector<double> grad_gamma_;
    std::vector<double> grad_beta_;
    BatchNormCache cache_;
};

class EluLayer final : public Layer {
public:
    LayerKind kind() const override { return LayerKind::Elu; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor3 infer(const Tensor3& x) const override { return elu_forward(x); }
    Tensor3 forward(const Tensor3& x, ForwardContext& ctx) override;
    Tensor3 backward(const Tensor3& grad_out) override { return elu_backward(input_, grad_out); }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<EluLayer>(*this); }
    std::string describe() const override { return "ELU(alpha=1)"; }

private:
    Tensor3 input_;
};

class DropoutLayer final : public Layer {
public:
    explicit DropoutLayer(double rate);
    LayerKind kind() const override { return LayerKind::Dropout; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor3 infer(const Tensor3& x) const override { return x; }
    Tensor3 forward(const Tensor3& x, ForwardContext& ctx) override;
    Tensor3 backward(const Tensor3& grad_out) override { return dropout_backward(grad_out, mask_); }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<DropoutLayer>(*this); }
    std::string describe() const override;

    double rate() const { return rate_; }
    /// When frozen, train-mode forward reuses the most recent mask.
    void freeze_mask(bool frozen) { frozen_ = frozen; }

private:
    double rate_;
    bool frozen_ = false;
    std::vector<double> mask_;
};

class DwtLayer final : public Layer {
public:
    explicit DwtLayer(WaveletLayerParams params);
    LayerKind kind() const override { return LayerKind::Dwt; }
    Shape output_shape(const Shape& in) const override;
    Tensor3 infer(const Tensor3& x) const override { return dwt_layer_forward(x, params_); }
    Tensor3 forward(const Tensor3& x, ForwardContext& ctx) override;
    Tensor3 backward(const Tensor3& grad_out) override;
    std::vector<ArrayRef> arrays() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<DwtLayer>(*this); }
    std::string describe() const override;

    WaveletLayerParams& params() { return params_; }

private:
    WaveletLayerParams params_;
    ConvGrads hp_grads_;
    ConvGrads lp_grads_;
    Tensor3 input_;
};

class IdwtLayer final : public Layer {
public:
    explicit IdwtLayer(WaveletLayerParams params);
    LayerKind kind() const override { return LayerKind::Idwt; }
    Shape output_shape(const Shape& in) const override;
    Tensor3 infer(const Tensor3& x) const override { return idwt_layer_forward(x, params_); }
    Tensor3 forward(const Tensor3& x, ForwardContext& ctx) override;
    Tensor3 backward(const Tensor3& grad_out) override;
    std::vector<ArrayRef> arrays() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<IdwtLayer>(*this); }
    std::string describe() const override;

    WaveletLayerParams& params() { return params_; }

private:
    WaveletLayerParams params_;
    ConvGrads hp_grads_;
    ConvGrads lp_grads_;
    Tensor3 input_;
};

/// Compares a layer's analytic backward with central finite differences of
/// the scalar probe sum(r * layer(x)) for a seeded random r, over every
/// input element and every learnable parameter. The layer runs in the given
/// mode; dropout must be frozen or in infer mode. Returns the maximum of
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-3).
double gradient_check(Layer& layer, const Tensor3& input, double h, std::uint64_t seed, Mode mode = Mode::Train);

}  // namespace wcae::nn
