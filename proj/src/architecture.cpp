#include "wcae/architecture.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "wcae/error.hpp"
#include "wcae/rng.hpp"

namespace wcae::arch {

ModelSpec ModelSpec::fcn() { return ModelSpec{}; }

ModelSpec ModelSpec::forward(int k) {
    ModelSpec s;
    s.variant = Variant::ForwardWavelet;
    s.wavelet_layers = k;
    return s;
}

ModelSpec ModelSpec::backward(int k) {
    ModelSpec s;
    s.variant = Variant::BackwardWavelet;
    s.wavelet_layers = k;
    return s;
}

ModelSpec ModelSpec::all_wavelet() {
    ModelSpec s;
    s.variant = Variant::AllWavelet;
    s.wavelet_layers = 5;
    return s;
}

int ModelSpec::effective_k() const {
    switch (variant) {
        case Variant::Fcn: return 0;
        case Variant::AllWavelet: return 5;
        default: return wavelet_layers;
    }
}

bool ModelSpec::is_wavelet_down(int p) const {
    const int k = effective_k();
    switch (variant) {
        case Variant::Fcn: return false;
        case Variant::ForwardWavelet: return p <= k;
        case Variant::BackwardWavelet: return p >= 6 - k;
        case Variant::AllWavelet: return true;
    }
    return false;
}

bool ModelSpec::is_wavelet_up(int q) const {
    const int k = effective_k();
    switch (variant) {
        case Variant::Fcn: return false;
        case Variant::ForwardWavelet: return q >= 6 - k;
        case Variant::BackwardWavelet: return q <= k;
        case Variant::AllWavelet: return true;
    }
    return false;
}

void ModelSpec::validate() const {
    if ((variant == Variant::ForwardWavelet || variant == Variant::BackwardWavelet) &&
        (wavelet_layers < 1 || wavelet_layers > 5)) {
        throw InvalidSpec("wavelet layer count k must lie in [1, 5], got " + std::to_string(wavelet_layers));
    }
    if (variant == Variant::AllWavelet && wavelet_layers != 5) {
        throw InvalidSpec("AllWavelet requires k = 5");
    }
    if (input_length == 0 || input_length % 32 != 0 || bottleneck_length != input_length / 32) {
        throw InvalidSpec("input length must be a multiple of 32 and the bottleneck exactly input/32");
    }
    for (int p = 1; p <= 5; ++p) {
        const std::size_t c = encoder_channels[static_cast<std::size_t>(p - 1)];
        if (c == 0) throw InvalidSpec("encoder channel counts must be positive");
        if (is_wavelet_down(p) && c % 2 != 0) {
            throw InvalidSpec("wavelet row " + std::to_string(p) + " needs an even channel count");
        }
    }
    if (kernel_conv < 2 || kernel_wavelet_branch < 1) throw InvalidSpec("kernel sizes too small");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidSpec("dropout rate must lie in [0, 1)");
}

std::string ModelSpec::label() const {
    switch (variant) {
        case Variant::Fcn: return "FCN";
        case Variant::ForwardWavelet: return "F" + std::to_string(wavelet_layers);
        case Variant::BackwardWavelet: return "B" + std::to_string(wavelet_layers);
        case Variant::AllWavelet: return "ALL";
    }
    return "?";
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Fcn: return "fcn";
        case Variant::ForwardWavelet: return "forward";
        case Variant::BackwardWavelet: return "backward";
        case Variant::AllWavelet: return "all";
    }
    return "?";
}

ModelSpec parse_variant(const std::string& text) {
    std::string t;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch)) && ch != ':' && ch != '-' && ch != '_')
            t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (t == "fcn") return ModelSpec::fcn();
    if (t == "all" || t == "allwavelet") return ModelSpec::all_wavelet();
    auto numbered = [&](const std::string& prefix) -> int {
        if (t.rfind(prefix, 0) != 0 || t.size() == prefix.size()) return -1;
        const std::string rest = t.substr(prefix.size());
        if (!std::all_of(rest.begin(), rest.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            return -1;
        return std::stoi(rest);
    };
    for (const char* p : {"forward", "f"}) {
        if (int k = numbered(p); k >= 0) {
            ModelSpec s = ModelSpec::forward(k);
            s.validate();
            return s;
        }
    }
    for (const char* p : {"backward", "b"}) {
        if (int k = numbered(p); k >= 0) {
            ModelSpec s = ModelSpec::backward(k);
            s.validate();
            return s;
        }
    }
    throw InvalidSpec("unknown model variant '" + text + "' (expected fcn, all, f<k> or b<k>)");
}

const char* row_kind_name(RowKind k) {
    switch (k) {
        case RowKind::Conv: return "conv";
        case RowKind::TransposeConv: return "tconv";
        case RowKind::Dwt: return "dwt";
        case RowKind::Idwt: return "idwt";
    }
    return "?";
}

std::size_t RowPlan::parameter_count() const {
    std::size_t n = 0;
    switch (kind) {
        case RowKind::Conv:
        case RowKind::TransposeConv: n = kernel * in_channels * out_channels + out_channels; break;
        case RowKind::Dwt: n = 2 * (kernel * in_channels * filters + filters); break;
        case RowKind::Idwt: {
            const std::size_t branch_in = branch_input == nn::BranchInput::Shared ? in_channels : in_channels / 2;
            n = 2 * (kernel * branch_in * filters + filters);
            break;
        }
    }
    if (activated) n += 2 * out_channels;
    return n;
}

std::vector<RowPlan> plan_rows(const ModelSpec& spec) {
    spec.validate();
    const auto& enc = spec.encoder_channels;
    std::array<std::size_t, 5> dec{};
    std::reverse_copy(enc.begin(), enc.end(), dec.begin());

    std::vector<RowPlan> rows;
    std::size_t length = spec.input_length;
    std::size_t channels = 1;

    for (int p = 1; p <= 5; ++p) {
        RowPlan r;
        r.row = p;
        r.section = "encoder";
        r.in_length = length;
        r.in_channels = channels;
        r.out_length = length / 2;
        r.out_channels = enc[static_cast<std::size_t>(p - 1)];
        r.activated = true;
        if (spec.is_wavelet_down(p)) {
            r.kind = RowKind::Dwt;
            r.filters = r.out_channels / 2;
            r.kernel = spec.kernel_wavelet_branch;
            r.stride = 1;
        } else {
            r.kind = RowKind::Conv;
            r.filters = r.out_channels;
            r.kernel = spec.kernel_conv;
            r.stride = 2;
        }
        rows.push_back(r);
        length = r.out_length;
        channels = r.out_channels;
    }

    auto plain = [&](int row, const char* section, std::size_t out_channels, bool activated) {
        RowPlan r;
        r.row = row;
        r.section = section;
        r.kind = RowKind::Conv;
        r.in_length = length;
        r.in_channels = channels;
        r.out_length = length;
        r.out_channels = out_channels;
        r.filters = out_channels;
        r.kernel = spec.kernel_conv;
        r.stride = 1;
        r.activated = activated;
        rows.push_back(r);
        channels = out_channels;
    };
    plain(6, "encoder", 1, false);
    plain(7, "decoder", 1, true);

    for (int q = 1; q <= 5; ++q) {
        RowPlan r;
        r.row = 7 + q;
        r.section = "decoder";
        r.in_length = length;
        r.in_channels = channels;
        r.out_length = length * 2;
        r.out_channels = dec[static_cast<std::size_t>(q - 1)];
        r.filters = r.out_channels;
        r.activated = true;
        if (spec.is_wavelet_up(q)) {
            r.kind = RowKind::Idwt;
            r.kernel = spec.kernel_wavelet_branch;
            r.stride = 1;
            r.branch_input = channels % 2 == 0 ? nn::BranchInput::Split : nn::BranchInput::Shared;
        } else {
            r.kind = RowKind::TransposeConv;
            r.kernel = spec.kernel_conv;
            r.stride = 2;
        }
        rows.push_back(r);
        length = r.out_length;
        channels = r.out_channels;
    }
    plain(13, "output", 1, false);
    return rows;
}

std::vector<TraceEntry> shape_trace(const ModelSpec& spec) {
    std::vector<TraceEntry> trace{{0, spec.input_length, 1}};
    for (const RowPlan& r : plan_rows(spec)) trace.push_back({r.row, r.out_length, r.out_channels});
    return trace;
}

// --- Network ------------------------------------------------------------------

Network::Network(ModelSpec spec, std::vector<std::unique_ptr<nn::Layer>> layers, std::vector<int> row_of_layer)
    : spec_(spec), layers_(std::move(layers)), row_of_layer_(std::move(row_of_layer)) {}

Network::Network(const Network& other) : spec_(other.spec_), row_of_layer_(other.row_of_layer_) {
    layers_.reserve(other.layers_.size());
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
    if (this != &other) {
        Network copy(other);
        *this = std::move(copy);
    }
    return *this;
}

Tensor3 Network::infer(const Tensor3& x) const {
    Tensor3 h = layers_.front()->infer(x);
    for (std::size_t i = 1; i < layers_.size(); ++i) h = layers_[i]->infer(h);
    return h;
}

Tensor3 Network::encode(const Tensor3& x) const {
    Tensor3 h = x;
    for (std::size_t i = 0; i < layers_.size() && row_of_layer_[i] <= 6; ++i) h = layers_[i]->infer(h);
    return h;
}

Tensor3 Network::forward(const Tensor3& x, nn::ForwardContext& ctx) {
    Tensor3 h = layers_.front()->forward(x, ctx);
    for (std::size_t i = 1; i < layers_.size(); ++i) h = layers_[i]->forward(h, ctx);
    return h;
}

Tensor3 Network::backward(const Tensor3& grad_out) {
    Tensor3 g = grad_out;
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
    return g;
}

std::vector<nn::ArrayRef> Network::arrays() {
    std::vector<nn::ArrayRef> out;
    for (auto& l : layers_) {
        auto a = l->arrays();
        std::move(a.begin(), a.end(), std::back_inserter(out));
    }
    return out;
}

std::vector<nn::ArrayRef> Network::parameters() {
    std::vector<nn::ArrayRef> out;
    for (auto& a : arrays())
        if (a.learnable()) out.push_back(a);
    return out;
}

std::size_t Network::parameter_count() {
    std::size_t n = 0;
    for (auto& l : layers_) n += l->parameter_count();
    return n;
}

void Network::zero_grad() {
    for (auto& l : layers_) l->zero_grad();
}

std::vector<double> Network::snapshot() {
    std::vector<double> out;
    for (const auto& a : arrays()) out.insert(out.end(), a.value.begin(), a.value.end());
    return out;
}

void Network::restore(const std::vector<double>& values) {
    std::size_t offset = 0;
    auto all = arrays();
    std::size_t total = 0;
    for (const auto& a : all) total += a.value.size();
    if (total != values.size()) throw InvalidInput("Network::restore: snapshot size mismatch");
    for (auto& a : all) {
        std::copy(values.begin() + static_cast<std::ptrdiff_t>(offset),
                  values.begin() + static_cast<std::ptrdiff_t>(offset + a.value.size()), a.value.begin());
        offset += a.value.size();
    }
}

// --- Builder ----------------------------------------------------------------------

namespace {

nn::WaveletLayerParams branch_params(std::size_t kernel, std::size_t in, std::size_t out, nn::BranchInput mode) {
    nn::WaveletLayerParams p;
    p.hp_conv = nn::ConvParams::zeros(kernel, in, out, 1);
    p.lp_conv = nn::ConvParams::zeros(kernel, in, out, 1);
    p.branch_input = mode;
    return p;
}

}  // namespace

Network build_model(const ModelSpec& spec) {
    std::vector<std::unique_ptr<nn::Layer>> layers;
    std::vector<int> rows;
    auto add = [&](int row, std::unique_ptr<nn::Layer> l) {
        layers.push_back(std::move(l));
        rows.push_back(row);
    };
    for (const RowPlan& r : plan_rows(spec)) {
        switch (r.kind) {
            case RowKind::Conv:
                add(r.row, std::make_unique<nn::ConvLayer>(
                               nn::ConvParams::zeros(r.kernel, r.in_channels, r.out_channels, r.stride)));
                break;
            case RowKind::TransposeConv:
                add(r.row, std::make_unique<nn::TransposeConvLayer>(
                               nn::ConvParams::zeros(r.kernel, r.in_channels, r.out_channels, r.stride)));
                break;
            case RowKind::Dwt:
                add(r.row, std::make_unique<nn::DwtLayer>(
                               branch_params(r.kernel, r.in_channels, r.filters, nn::BranchInput::Split)));
                break;
            case RowKind::Idwt: {
                const std::size_t branch_in =
                    r.branch_input == nn::BranchInput::Shared ? r.in_channels : r.in_channels / 2;
                add(r.row, std::make_unique<nn::IdwtLayer>(
                               branch_params(r.kernel, branch_in, r.filters, r.branch_input)));
                break;
            }
        }
        if (r.activated) {
            add(r.row, std::make_unique<nn::BatchNormLayer>(r.out_channels));
            add(r.row, std::make_unique<nn::EluLayer>());
            add(r.row, std::make_unique<nn::DropoutLayer>(spec.dropout_rate));
        }
    }
    Network net(spec, std::move(layers), std::move(rows));
    init_parameters(net, spec.seed);
    return net;
}

void init_parameters(Network& net, std::uint64_t seed) {
    for (std::size_t li = 0; li < net.layer_count(); ++li) {
        auto arrays = net.layer(li).arrays();
        for (std::size_t ai = 0; ai < arrays.size(); ++ai) {
            auto& a = arrays[ai];
            const std::string& n = a.name;
            auto ends_with = [&](const std::string& suffix) {
                return n.size() >= suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0;
            };
            if (ends_with("weights")) {
                const double fan_in = static_cast<double>(a.dims[0]) * static_cast<double>(a.dims[1]);
                const double limit = std::sqrt(3.0 / fan_in);
                Rng rng(derive_seed(seed, li, ai));
                for (auto& v : a.value) v = rng.uniform(-limit, limit);
            } else if (n == "gamma" || n == "running_var") {
                std::fill(a.value.begin(), a.value.end(), 1.0);
            } else {
                std::fill(a.value.begin(), a.value.end(), 0.0);
            }
        }
    }
}

std::string describe_text(const ModelSpec& spec) {
    const auto rows = plan_rows(spec);
    std::size_t total = 0;
    std::ostringstream os;
    os << "model " << spec.label() << " (" << variant_name(spec.variant) << ", k=" << spec.effective_k() << ")\n";
    os << std::left << std::setw(5) << "No" << std::setw(9) << "Section" << std::setw(12) << "Output"
       << std::setw(48) << "Layer" << "Params\n";
    os << std::setw(5) << "-" << std::setw(9) << "input" << std::setw(12)
       << (std::to_string(spec.input_length) + " x 1") << "\n";
    for (const RowPlan& r : rows) {
        std::ostringstream layer;
        switch (r.kind) {
            case RowKind::Conv: layer << "Conv(" << r.filters << ", " << r.kernel << ", " << r.stride << ")"; break;
            case RowKind::TransposeConv:
                layer << "Deconv(" << r.filters << ", " << r.kernel << ", " << r.stride << ")";
                break;
            case RowKind::Dwt:
                layer << "DWT + HPF/LPF Conv(" << r.filters << ", " << r.kernel << ", " << r.stride << ")";
                break;
            case RowKind::Idwt:
                layer << "IDWT + HPF/LPF Deconv(" << r.filters << ", " << r.kernel << ", " << r.stride << ")";
                break;
        }
        if (r.activated) layer << " +BN/ELU/DO";
        const std::size_t params = r.parameter_count();
        total += params;
        os << std::setw(5) << r.row << std::setw(9) << r.section << std::setw(12)
           << (std::to_string(r.out_length) + " x " + std::to_string(r.out_channels)) << std::setw(48) << layer.str()
           << params << "\n";
    }
    os << "total parameters: " << total << "\n";
    return os.str();
}

std::string describe_kv(const ModelSpec& spec) {
    const auto rows = plan_rows(spec);
    std::size_t total = 0;
    for (const RowPlan& r : rows) total += r.parameter_count();
    std::ostringstream os;
    os << "model=" << spec.label() << " variant=" << variant_name(spec.variant) << " k=" << spec.effective_k()
       << " total_parameters=" << total << "\n";
    os << "row=0 section=input length=" << spec.input_length << " channels=1\n";
    for (const RowPlan& r : rows) {
        os << "row=" << r.row << " section=" << r.section << " kind=" << row_kind_name(r.kind)
           << " filters=" << r.filters << " kernel=" << r.kernel << " stride=" << r.stride
           << " length=" << r.out_length << " channels=" << r.out_channels
           << " activated=" << (r.activated ? 1 : 0);
        if (r.kind == RowKind::Idwt)
            os << " branch_input=" << (r.branch_input == nn::BranchInput::Shared ? "shared" : "split");
        os << " params=" << r.parameter_count() << "\n";
    }
    return os.str();
}

}  // namespace wcae::arch
