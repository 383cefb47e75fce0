#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wcae/architecture.hpp"
#include "wcae/checkpoint.hpp"

using namespace wcae;
using namespace wcae::arch;

namespace {

std::vector<ModelSpec> all_variants() {
    std::vector<ModelSpec> specs{ModelSpec::fcn(), ModelSpec::all_wavelet()};
    for (int k = 1; k <= 5; ++k) {
        specs.push_back(ModelSpec::forward(k));
        specs.push_back(ModelSpec::backward(k));
    }
    return specs;
}

std::vector<RowKind> kinds(const ModelSpec& s) {
    std::vector<RowKind> out;
    for (const auto& r : plan_rows(s)) out.push_back(r.kind);
    return out;
}

Tensor3 random_batch(std::size_t batch, std::uint64_t seed) {
    Rng rng(seed);
    Tensor3 x(batch, 1024, 1);
    for (auto& v : x.values()) v = rng.uniform(0.0, 1.0);
    return x;
}

}  // namespace

TEST_CASE("FCN shape trace reproduces the reference output column", "[architecture]") {
    const std::vector<TraceEntry> expected{
        {0, 1024, 1}, {1, 512, 40}, {2, 256, 20},  {3, 128, 20},  {4, 64, 20},   {5, 32, 40},   {6, 32, 1},
        {7, 32, 1},   {8, 64, 40},  {9, 128, 20},  {10, 256, 20}, {11, 512, 20}, {12, 1024, 40}, {13, 1024, 1},
    };
    CHECK(shape_trace(ModelSpec::fcn()) == expected);
}

TEST_CASE("every variant shares the FCN output shapes", "[architecture]") {
    const auto reference = shape_trace(ModelSpec::fcn());
    for (const auto& s : all_variants()) {
        INFO(s.label());
        CHECK(shape_trace(s) == reference);
        CHECK(shape_trace(s).front() == TraceEntry{0, 1024, 1});
    }
}

TEST_CASE("backward-type placement of wavelet layers", "[architecture]") {
    const auto b3 = plan_rows(ModelSpec::backward(3));
    for (const auto& r : b3) {
        INFO("row " << r.row);
        const bool dwt = r.row >= 3 && r.row <= 5;
        const bool idwt = r.row >= 8 && r.row <= 10;
        CHECK((r.kind == RowKind::Dwt) == dwt);
        CHECK((r.kind == RowKind::Idwt) == idwt);
    }
    const auto b1 = plan_rows(ModelSpec::backward(1));
    CHECK(b1[4].kind == RowKind::Dwt);
    CHECK(b1[7].kind == RowKind::Idwt);
    CHECK(b1[7].branch_input == nn::BranchInput::Shared);
    CHECK(b1[8].kind == RowKind::TransposeConv);
}

TEST_CASE("forward-type placement of wavelet layers", "[architecture]") {
    for (const auto& r : plan_rows(ModelSpec::forward(2))) {
        INFO("row " << r.row);
        CHECK((r.kind == RowKind::Dwt) == (r.row == 1 || r.row == 2));
        CHECK((r.kind == RowKind::Idwt) == (r.row == 11 || r.row == 12));
    }
}

TEST_CASE("five wavelet layers forward or backward equals all-wavelet", "[architecture]") {
    CHECK(kinds(ModelSpec::backward(5)) == kinds(ModelSpec::forward(5)));
    CHECK(kinds(ModelSpec::backward(5)) == kinds(ModelSpec::all_wavelet()));
}

TEST_CASE("wavelet count out of range is an invalid spec", "[architecture]") {
    CHECK_THROWS_AS(plan_rows(ModelSpec::backward(0)), InvalidSpec);
    CHECK_THROWS_AS(plan_rows(ModelSpec::forward(6)), InvalidSpec);
    CHECK_THROWS_AS(parse_variant("b7"), InvalidSpec);
    CHECK_THROWS_AS(parse_variant("sideways"), InvalidSpec);
}

TEST_CASE("variant labels parse", "[architecture]") {
    CHECK(parse_variant("fcn").variant == Variant::Fcn);
    CHECK(parse_variant("B1").label() == "B1");
    CHECK(parse_variant("forward:3").label() == "F3");
    CHECK(parse_variant("all").label() == "ALL");
}

TEST_CASE("built networks follow the planned shapes row by row", "[architecture][property]") {
    for (const auto& s : all_variants()) {
        INFO(s.label());
        Network net = build_model(s);
        const auto trace = shape_trace(s);
        Tensor3 h = random_batch(2, 1);
        std::size_t layer = 0;
        for (std::size_t row = 1; row < trace.size(); ++row) {
            while (layer < net.layer_count() && net.row_of_layer(layer) == static_cast<int>(row)) {
                h = net.layer(layer).infer(h);
                ++layer;
            }
            CHECK(h.shape() == Shape{2, trace[row].length, trace[row].channels});
        }
        CHECK(layer == net.layer_count());
    }
}

TEST_CASE("non-terminal rows carry batch norm, ELU and dropout", "[architecture]") {
    Network net = build_model(ModelSpec::fcn());
    // 11 activated rows x 4 layers + 2 bare rows.
    CHECK(net.layer_count() == 11 * 4 + 2);
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        const int row = net.row_of_layer(i);
        if (row == 6 || row == 13) CHECK(net.layer(i).kind() == nn::LayerKind::Conv);
    }
}

TEST_CASE("initialization is deterministic per seed", "[architecture]") {
    Network a = build_model(ModelSpec::backward(2));
    Network b = build_model(ModelSpec::backward(2));
    CHECK(a.snapshot() == b.snapshot());
    ModelSpec other = ModelSpec::backward(2);
    other.seed = 99;
    Network c = build_model(other);
    CHECK(a.snapshot() != c.snapshot());
}

TEST_CASE("biases start at zero and batch norm at identity", "[architecture]") {
    Network net = build_model(ModelSpec::all_wavelet());
    for (const auto& a : net.arrays()) {
        INFO(a.name);
        if (a.name.find("bias") != std::string::npos || a.name == "beta" || a.name == "running_mean")
            for (double v : a.value) CHECK(v == 0.0);
        if (a.name == "gamma" || a.name == "running_var")
            for (double v : a.value) CHECK(v == 1.0);
    }
}

TEST_CASE("weight variance matches the fan-in target", "[architecture]") {
    Network net = build_model(ModelSpec::fcn());
    std::size_t checked = 0;
    for (const auto& a : net.arrays()) {
        if (a.name != "weights" || a.value.size() < 10000) continue;
        const double target = 1.0 / (static_cast<double>(a.dims[0]) * a.dims[1]);
        double mean = 0.0, var = 0.0;
        for (double v : a.value) mean += v;
        mean /= static_cast<double>(a.value.size());
        for (double v : a.value) var += (v - mean) * (v - mean);
        var /= static_cast<double>(a.value.size() - 1);
        CHECK(std::abs(var / target - 1.0) < 0.10);
        ++checked;
    }
    CHECK(checked >= 2);
}

TEST_CASE("fresh networks produce finite output for every variant", "[architecture][property]") {
    for (const auto& s : all_variants()) {
        INFO(s.label());
        Network net = build_model(s);
        const Tensor3 y = net.infer(random_batch(3, 7));
        CHECK(y.shape() == Shape{3, 1024, 1});
        for (double v : y.values()) REQUIRE(std::isfinite(v));
        Rng rng(1);
        nn::ForwardContext ctx{nn::Mode::Train, &rng};
        const Tensor3 yt = net.forward(random_batch(3, 8), ctx);
        for (double v : yt.values()) REQUIRE(std::isfinite(v));
    }
}

TEST_CASE("bottleneck holds 32 values per window", "[architecture]") {
    for (const auto& s : all_variants()) {
        const Tensor3 z = build_model(s).encode(random_batch(2, 3));
        CHECK(z.shape() == Shape{2, 32, 1});
    }
}

TEST_CASE("backward-1 has fewer parameters than FCN", "[architecture]") {
    Network fcn = build_model(ModelSpec::fcn());
    Network b1 = build_model(ModelSpec::backward(1));
    CHECK(b1.parameter_count() < fcn.parameter_count());
    std::size_t planned = 0;
    for (const auto& r : plan_rows(ModelSpec::fcn())) planned += r.parameter_count();
    CHECK(planned == fcn.parameter_count());
    CHECK(describe_kv(ModelSpec::fcn()).find("total_parameters=" + std::to_string(planned)) != std::string::npos);
}

TEST_CASE("describe emits one key=value line per row", "[architecture]") {
    const std::string kv = describe_kv(ModelSpec::fcn());
    std::size_t layer_lines = 0;
    std::size_t pos = 0;
    while ((pos = kv.find("kind=", pos)) != std::string::npos) {
        ++layer_lines;
        ++pos;
    }
    CHECK(layer_lines == 13);
    CHECK(kv.find("row=6 section=encoder kind=conv filters=1 kernel=16 stride=1 length=32 channels=1") !=
          std::string::npos);
    CHECK(describe_text(ModelSpec::backward(3)).find("DWT") != std::string::npos);
}

TEST_CASE("checkpoint round trip is bit exact", "[checkpoint]") {
    for (const auto& s : all_variants()) {
        ModelSpec spec = s;
        spec.seed = 1234;
        Network net = build_model(spec);
        // Perturb running statistics so they are not the defaults.
        Rng rng(5);
        nn::ForwardContext ctx{nn::Mode::Train, &rng};
        net.forward(random_batch(2, 4), ctx);
        const std::string bytes = ckpt::serialize(net);
        Network back = ckpt::deserialize(bytes);
        CHECK(ckpt::serialize(back) == bytes);
        CHECK(back.snapshot() == net.snapshot());
        CHECK(back.spec().label() == spec.label());
    }
}

TEST_CASE("checkpoint reader rejects bad input", "[checkpoint]") {
    Network net = build_model(ModelSpec::backward(1));
    std::string bytes = ckpt::serialize(net);

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(ckpt::deserialize(bad_magic), ParseError);

    std::string bad_version = bytes;
    bad_version[8] = 9;
    try {
        ckpt::deserialize(bad_version);
        FAIL("expected a version error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("version") != std::string::npos);
        CHECK(e.offset() == 8);
    }

    CHECK_THROWS_AS(ckpt::deserialize(bytes.substr(0, bytes.size() - 3)), ParseError);
    CHECK_THROWS_AS(ckpt::deserialize(bytes + "x"), ParseError);
}
