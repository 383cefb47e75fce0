#include "wcae/checkpoint.hpp"

#include "wcae/binary_io.hpp"

namespace wcae::ckpt {

std::string serialize(arch::Network& net) {
    const arch::ModelSpec& s = net.spec();
    ByteWriter w;
    w.bytes(kMagic);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(s.variant));
    w.u32(static_cast<std::uint32_t>(s.wavelet_layers));
    w.u64(s.seed);
    w.u32(static_cast<std::uint32_t>(s.input_length));
    w.u32(static_cast<std::uint32_t>(s.bottleneck_length));
    for (std::size_t c : s.encoder_channels) w.u32(static_cast<std::uint32_t>(c));
    w.u32(static_cast<std::uint32_t>(s.kernel_conv));
    w.u32(static_cast<std::uint32_t>(s.kernel_wavelet_branch));
    w.f64(s.dropout_rate);

    w.u32(static_cast<std::uint32_t>(net.layer_count()));
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        nn::Layer& layer = net.layer(i);
        const auto arrays = layer.arrays();
        w.u32(static_cast<std::uint32_t>(layer.kind()));
        w.u32(static_cast<std::uint32_t>(net.row_of_layer(i)));
        w.u32(static_cast<std::uint32_t>(arrays.size()));
        for (const auto& a : arrays) {
            w.u32(static_cast<std::uint32_t>(a.dims.size()));
            for (auto d : a.dims) w.u32(d);
            for (double v : a.value) w.f64(v);
        }
    }
    return w.take();
}

arch::Network deserialize(std::string_view bytes, const std::string& context) {
    ByteReader r(bytes, context);
    if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
        throw ParseError(context + ": not a checkpoint (bad magic)", 0);
    }
    const std::uint64_t version_at = r.offset();
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw ParseError(context + ": unsupported checkpoint version " + std::to_string(version) + " (expected " +
                             std::to_string(kVersion) + ")",
                         version_at);
    }
    arch::ModelSpec s;
    const std::uint32_t variant = r.u32();
    if (variant > static_cast<std::uint32_t>(arch::Variant::AllWavelet)) r.fail("unknown variant tag");
    s.variant = static_cast<arch::Variant>(variant);
    s.wavelet_layers = static_cast<int>(r.u32());
    s.seed = r.u64();
    s.input_length = r.u32();
    s.bottleneck_length = r.u32();
    for (auto& c : s.encoder_channels) c = r.u32();
    s.kernel_conv = r.u32();
    s.kernel_wavelet_branch = r.u32();
    s.dropout_rate = r.f64();
    try {
        s.validate();
    } catch (const InvalidSpec& e) {
        r.fail(std::string("invalid model spec: ") + e.what());
    }

    arch::Network net = arch::build_model(s);
    const std::uint32_t count = r.u32();
    if (count != net.layer_count()) r.fail("layer count does not match the model spec");
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        nn::Layer& layer = net.layer(i);
        const std::uint32_t tag = r.u32();
        if (tag != static_cast<std::uint32_t>(layer.kind())) {
            r.fail("layer " + std::to_string(i) + " kind tag " + std::to_string(tag) + " does not match " +
                   nn::to_string(layer.kind()));
        }
        if (r.u32() != static_cast<std::uint32_t>(net.row_of_layer(i))) r.fail("layer row mismatch");
        auto arrays = layer.arrays();
        if (r.u32() != arrays.size()) r.fail("array count mismatch in layer " + std::to_string(i));
        for (auto& a : arrays) {
            const std::uint32_t rank = r.u32();
            if (rank != a.dims.size()) r.fail("rank mismatch for " + a.name);
            for (auto d : a.dims)
                if (r.u32() != d) r.fail("shape mismatch for " + a.name);
            for (auto& v : a.value) v = r.f64();
        }
    }
    if (!r.at_end()) r.fail("trailing bytes after last layer");
    return net;
}

void save(arch::Network& net, const std::string& path) { write_file(path, serialize(net)); }

arch::Network load(const std::string& path) { return deserialize(read_file(path), path); }

}  // namespace wcae::ckpt
