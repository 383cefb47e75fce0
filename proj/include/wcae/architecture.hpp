#pragma once

// Declarative autoencoder specifications and the builder that turns them
// into a sequential Network.
//
// Thirteen numbered rows: encoder rows 1-5 halve the length, row 6 maps to
// the one-channel bottleneck, row 7 is a stride-1 expansion conv, decoder
// rows 8-12 double the length and row 13 is the output conv. Rows 6 and 13
// are bare; every other row is followed by BatchNorm, ELU and Dropout.
//
// Wavelet placement, with "down-sampling position" p = 1..5 meaning rows
// 1..5 and "up-sampling position" q = 1..5 meaning rows 8..12:
//   Forward(k):  DWT at p = 1..k,       IDWT at the last k up positions (rows 13-k..12)
//   Backward(k): DWT at p = 6-k..5,     IDWT at the first k up positions (rows 8..7+k)
//   All:         every down/up position (same as Forward(5) and Backward(5))

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "wcae/layers.hpp"

namespace wcae::arch {

enum class Variant : std::uint32_t {
    Fcn = 0,
    ForwardWavelet = 1,
    BackwardWavelet = 2,
    AllWavelet = 3,
};

struct ModelSpec {
    Variant variant = Variant::Fcn;
    int wavelet_layers = 0;  ///< k, for Forward/Backward variants
    std::size_t input_length = 1024;
    std::size_t bottleneck_length = 32;
    std::array<std::size_t, 5> encoder_channels{40, 20, 20, 20, 40};
    std::size_t kernel_conv = 16;
    std::size_t kernel_wavelet_branch = 8;
    double dropout_rate = 0.1;
    std::uint64_t seed = 0;

    static ModelSpec fcn();
    static ModelSpec forward(int k);
    static ModelSpec backward(int k);
    static ModelSpec all_wavelet();

    /// Throws InvalidSpec when any invariant is violated.
    void validate() const;
    /// Short label: FCN, F1..F5, B1..B5, ALL.
    std::string label() const;
    /// Number of wavelet positions on each side (0 for FCN, 5 for AllWavelet).
    int effective_k() const;
    bool is_wavelet_down(int position) const;  ///< position 1..5
    bool is_wavelet_up(int position) const;    ///< position 1..5
};

/// Parses labels like "fcn", "f3", "b1", "all", "backward:2".
ModelSpec parse_variant(const std::string& text);
const char* variant_name(Variant v);

enum class RowKind { Conv, TransposeConv, Dwt, Idwt };
const char* row_kind_name(RowKind k);

struct RowPlan {
    int row = 0;
    std::string section;  ///< encoder | decoder | output
    RowKind kind = RowKind::Conv;
    std::size_t in_length = 0;
    std::size_t in_channels = 0;
    std::size_t out_length = 0;
    std::size_t out_channels = 0;
    std::size_t filters = 0;  ///< per branch for wavelet rows
    std::size_t kernel = 0;
    std::size_t stride = 0;
    bool activated = false;  ///< followed by BatchNorm, ELU, Dropout
    nn::BranchInput branch_input = nn::BranchInput::Split;

    std::size_t parameter_count() const;  ///< main layer plus batch-norm gamma/beta
};

std::vector<RowPlan> plan_rows(const ModelSpec& spec);

struct TraceEntry {
    int index = 0;
    std::size_t length = 0;
    std::size_t channels = 0;
    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

/// (0, input_length, 1) followed by one entry per row.
std::vector<TraceEntry> shape_trace(const ModelSpec& spec);

class Network {
public:
    Network(ModelSpec spec, std::vector<std::unique_ptr<nn::Layer>> layers, std::vector<int> row_of_layer);
    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;

    const ModelSpec& spec() const { return spec_; }
    std::size_t layer_count() const { return layers_.size(); }
    nn::Layer& layer(std::size_t i) { return *layers_[i]; }
    const nn::Layer& layer(std::size_t i) const { return *layers_[i]; }
    int row_of_layer(std::size_t i) const { return row_of_layer_[i]; }

    /// Side-effect free inference (batch norm uses running statistics).
    Tensor3 infer(const Tensor3& x) const;
    /// Output of row 6 in infer mode.
    Tensor3 encode(const Tensor3& x) const;

    Tensor3 forward(const Tensor3& x, nn::ForwardContext& ctx);
    Tensor3 backward(const Tensor3& grad_out);

    std::vector<nn::ArrayRef> arrays();
    std::vector<nn::ArrayRef> parameters();
    std::size_t parameter_count();
    void zero_grad();

    /// Flattened copy of every persisted array (parameters and running stats).
    std::vector<double> snapshot();
    void restore(const std::vector<double>& values);

private:
    ModelSpec spec_;
    std::vector<std::unique_ptr<nn::Layer>> layers_;
    std::vector<int> row_of_layer_;
};

/// Builds the network and initializes it with spec.seed.
Network build_model(const ModelSpec& spec);

/// LeCun-style uniform weights U(-sqrt(3/fan_in), sqrt(3/fan_in)) with
/// fan_in = kernel * in_channels, zero biases, gamma 1, beta 0, running
/// mean 0 and running variance 1.
void init_parameters(Network& net, std::uint64_t seed);

/// Human-readable layer table.
std::string describe_text(const ModelSpec& spec);
/// Line-oriented key=value form of the same trace.
std::string describe_kv(const ModelSpec& spec);

}  // namespace wcae::arch
